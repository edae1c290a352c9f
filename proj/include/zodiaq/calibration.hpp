#pragma once

// Calibration of the unpublished coefficients against the prototype's top
// speed (8 BL/min) and top yaw rate (3 pi rad/min) under full actuation.

#include "zodiaq/scenario.hpp"

namespace zodiaq {

struct SpeedTargets {
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s
};

inline SpeedTargets prototype_targets(const ZodiaqParams& p) { return {8.0 * p.body_length / 60.0, 3.0 * M_PI / 60.0}; }

/// Largest unsaturated forward (+x) wrench, as motor speeds.
inline MotorSpeeds full_forward(const SimpleModelParams& p) {
  return full_effort(Allocator(p), make_twist(Vec3::Zero(), Vec3::UnitX())).omega;
}

/// Largest unsaturated positive yaw moment, as motor speeds.
inline MotorSpeeds full_yaw(const SimpleModelParams& p) {
  return full_effort(Allocator(p), make_twist(Vec3::UnitZ(), Vec3::Zero())).omega;
}

/// Steady planar speed and yaw rate of the simple plant under constant speeds.
inline SpeedTargets simple_steady_state(const SimpleModelParams& p, const MotorSpeeds& w, double t_end = 120.0, double dt = 0.01) {
  SimpleState s;
  for (double t = 0.0; t < t_end; t += dt) s = simple_rk4(s, w, p, dt);
  return {s.world_velocity().head<2>().norm(), std::abs(s.yaw_rate())};
}

struct ThrustCalibration {
  double c_thrust = 0.0;
  double c_reaction = 0.0;
  SpeedTargets achieved;
  int iterations = 0;
};

/// Fixed-point iteration on (c_T, c_M): each pass scales a coefficient by the
/// ratio of the drag at the target to the drag at the achieved steady state.
inline ThrustCalibration calibrate_thrust(SimpleModelParams p, const SpeedTargets& target, double tol = 1e-6, int max_iter = 50) {
  auto drag = [](double q, double l, double v) { return q * v * v + l * v; };
  ThrustCalibration out;
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    const double v = simple_steady_state(p, full_forward(p)).speed;
    const double r = simple_steady_state(p, full_yaw(p)).yaw_rate;
    out.achieved = {v, r};
    const double ev = std::abs(v / target.speed - 1.0), er = std::abs(r / target.yaw_rate - 1.0);
    if ((ev < tol && er < tol) || out.iterations == max_iter) break;
    p.c_thrust *= drag(p.quadratic_drag[3], p.linear_drag[3], target.speed) / drag(p.quadratic_drag[3], p.linear_drag[3], v);
    p.c_reaction *= drag(p.quadratic_drag[2], p.linear_drag[2], target.yaw_rate) / drag(p.quadratic_drag[2], p.linear_drag[2], r);
  }
  out.c_thrust = p.c_thrust;
  out.c_reaction = p.c_reaction;
  return out;
}

struct DragCalibration {
  double scale = 1.0;           // applied to the translational shell drag (quadratic and linear)
  double rotation_scale = 1.0;  // applied to the rotational shell drag
  Mat6 shell_drag;
  Mat6 shell_linear_drag;
  SpeedTargets achieved;  // by the twin
  int iterations = 0;
};

/// Mean planar speed and yaw rate of the twin over [t_end - window, t_end]
/// with constant motor speeds applied open loop.
inline SpeedTargets twin_steady_state(const ScenarioConfig& c, const MotorSpeeds& w, double t_end, double window) {
  TwinPlant plant(c, c.assembly.removed);
  plant.command(0.0, w);
  const double dt = c.integrator.dt;
  const long steps = std::lround(t_end / dt);
  const long mark = std::lround((t_end - window) / dt);
  Vec3 p0 = Vec3::Zero();
  double yaw = 0.0, turned = 0.0;
  for (long k = 0; k < steps; ++k) {
    if (k == mark) {
      p0 = plant.shell().position;
      turned = 0.0;
    }
    plant.step(static_cast<double>(k) * dt, dt);
    const double next = plant.shell().rpy.z();
    turned += wrap_angle(next - yaw);
    yaw = next;
  }
  return {(plant.shell().position - p0).head<2>().norm() / window, std::abs(turned) / window};
}

/// Scales the shell's translational drag until the twin's top speed under the
/// full-forward command matches `target.speed`, and its rotational drag until
/// the top yaw rate under the full-yaw command matches `target.yaw_rate`
/// (both within `tol`, relative).
inline DragCalibration calibrate_shell_drag(ScenarioConfig c, const SpeedTargets& target, double tol = 0.01, int max_iter = 10,
                                            double t_end = 40.0, double window = 10.0) {
  const SimpleModelParams model = controller_model(c);
  const MotorSpeeds forward = full_forward(model), yaw = full_yaw(model);
  DragCalibration out;
  const Mat6 q0 = c.hydro.shell_drag, l0 = c.hydro.shell_linear_drag;
  // Drag balances the (fixed) propulsion: scale by drag(achieved) / drag(target).
  auto ratio = [](double q, double l, double achieved, double goal) {
    return (q * achieved * achieved + l * achieved) / (q * goal * goal + l * goal);
  };
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    for (int i = 0; i < 6; ++i) {
      const double s = i < 3 ? out.rotation_scale : out.scale;
      c.hydro.shell_drag(i, i) = s * q0(i, i);
      c.hydro.shell_linear_drag(i, i) = s * l0(i, i);
    }
    out.achieved = {twin_steady_state(c, forward, t_end, window).speed, twin_steady_state(c, yaw, t_end, window).yaw_rate};
    const bool done = std::abs(out.achieved.speed / target.speed - 1.0) < tol && std::abs(out.achieved.yaw_rate / target.yaw_rate - 1.0) < tol;
    if (done || out.iterations == max_iter) break;
    out.scale *= ratio(c.hydro.shell_drag(3, 3), c.hydro.shell_linear_drag(3, 3), out.achieved.speed, target.speed);
    out.rotation_scale *= ratio(c.hydro.shell_drag(2, 2), c.hydro.shell_linear_drag(2, 2), out.achieved.yaw_rate, target.yaw_rate);
  }
  out.shell_drag = c.hydro.shell_drag;
  out.shell_linear_drag = c.hydro.shell_linear_drag;
  return out;
}

}  // namespace zodiaq
