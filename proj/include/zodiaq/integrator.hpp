#pragma once

// Time integration of TwinModel with kinematically prescribed motors.
//
// The floating base is advanced in a local exponential chart (q[0..5]) that
// is folded back into the base pose after every step, so the chart stays
// near the origin where dexp is well conditioned.

#include "zodiaq/dynamics.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace zodiaq {

/// Motor speed program: commanded speeds are reached by a linear ramp, and
/// the joint angle is the exact integral of the ramped speed.
class MotorDrive {
 public:
  explicit MotorDrive(double ramp_time = 0.1) : ramp_(ramp_time) {}

  double ramp_time() const { return ramp_; }

  /// New target speeds (rad/s, signed) from time t on.
  void command(double t, const std::array<double, kNumFaces>& omega) {
    for (std::size_t i = 0; i < omega.size(); ++i) {
      Segment& s = seg_[i];
      const double th = angle_of(s, t);
      const double w = speed_of(s, t);
      s = {t, th, w, omega[i]};
    }
  }

  double angle(int motor, double t) const { return angle_of(seg_[idx(motor)], t); }
  double speed(int motor, double t) const { return speed_of(seg_[idx(motor)], t); }
  double accel(int motor, double t) const {
    const Segment& s = seg_[idx(motor)];
    const double tau = t - s.t0;
    if (ramp_ <= 0.0 || tau < 0.0 || tau >= ramp_) return 0.0;
    return (s.w1 - s.w0) / ramp_;
  }
  double target(int motor) const { return seg_[idx(motor)].w1; }

  /// Prescribed positions/velocities/accelerations in assembly order.
  PrescribedMotion motion(const Assembly& a, double t) const {
    const auto& p = a.prescribed_dofs();
    PrescribedMotion m{Eigen::VectorXd(p.size()), Eigen::VectorXd(p.size()), Eigen::VectorXd(p.size())};
    for (std::size_t k = 0; k < p.size(); ++k) {
      const int motor = motor_of(a, p[k]);
      m.position[static_cast<Eigen::Index>(k)] = angle(motor, t);
      m.velocity[static_cast<Eigen::Index>(k)] = speed(motor, t);
      m.acceleration[static_cast<Eigen::Index>(k)] = accel(motor, t);
    }
    return m;
  }

  /// Overwrites the prescribed coordinates of `st` with the program at t.
  void impose(const Assembly& a, double t, GeneralizedState& st) const {
    for (int dof : a.prescribed_dofs()) {
      const int motor = motor_of(a, dof);
      st.q[dof] = angle(motor, t);
      st.qdot[dof] = speed(motor, t);
    }
  }

  static int motor_of(const Assembly& a, int dof) {
    for (int m = 1; m <= kNumFaces; ++m)
      if (a.motor_dof(m) == dof) return m;
    throw std::logic_error("prescribed coordinate without motor");
  }

 private:
  struct Segment {
    double t0 = 0.0;
    double theta0 = 0.0;
    double w0 = 0.0;
    double w1 = 0.0;
  };

  static std::size_t idx(int motor) {
    if (motor < 1 || motor > kNumFaces) throw std::out_of_range("motor number out of range");
    return static_cast<std::size_t>(motor - 1);
  }

  double speed_of(const Segment& s, double t) const {
    const double tau = t - s.t0;
    if (ramp_ <= 0.0 || tau >= ramp_) return s.w1;
    if (tau <= 0.0) return s.w0;
    return s.w0 + (s.w1 - s.w0) * tau / ramp_;
  }

  double angle_of(const Segment& s, double t) const {
    const double tau = t - s.t0;
    if (ramp_ <= 0.0) return s.theta0 + s.w1 * tau;
    if (tau <= ramp_) return s.theta0 + s.w0 * tau + 0.5 * (s.w1 - s.w0) * tau * tau / ramp_;
    return s.theta0 + 0.5 * (s.w0 + s.w1) * ramp_ + s.w1 * (tau - ramp_);
  }

  double ramp_;
  std::array<Segment, kNumFaces> seg_{};
};

enum class IntegratorKind { rk4, implicit_euler };

inline const char* to_string(IntegratorKind k) { return k == IntegratorKind::rk4 ? "rk4" : "implicit_euler"; }

struct IntegratorConfig {
  IntegratorKind kind = IntegratorKind::rk4;
  double dt = 2e-4;
  double t_end = 1.0;
  double log_rate = 50.0;      // Hz
  double control_rate = 10.0;  // Hz
  /// Divergence guard on generalized velocities.
  double max_speed = 1e4;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, GeneralizedState snapshot)
      : std::runtime_error(what), time(t), state(std::move(snapshot)) {}
  double time;
  GeneralizedState state;
};

/// Chart rate of the floating base: d(chart)/dt = T(chart)^-1 * body twist.
inline Vec6 chart_rate(const Vec6& chart, const Vec6& twist) {
  if (chart.isZero(0.0)) return twist;
  return tangent_op(chart).partialPivLu().solve(twist);
}

class TwinIntegrator {
 public:
  TwinIntegrator(const TwinModel& model, MotorDrive& drive) : model_(&model), drive_(&drive) {}

  /// Advances (t, st) by dt. `st` must be normalized on entry; it is
  /// normalized on exit.
  void step(double t, double dt, GeneralizedState& st, IntegratorKind kind) const {
    if (kind == IntegratorKind::rk4)
      rk4(t, dt, st);
    else
      implicit_euler(t, dt, st);
    drive_->impose(model_->assembly(), t + dt, st);
    st.normalize(model_->assembly());
  }

  /// Full generalized acceleration (free from the dynamics, prescribed from the drive).
  Eigen::VectorXd acceleration(double t, const GeneralizedState& st, Eigen::VectorXd* reaction = nullptr) const {
    const Assembly& a = model_->assembly();
    const PrescribedMotion pm = drive_->motion(a, t);
    const Eigen::VectorXd qdd_f = model_->generalized_accel(st, t, pm.acceleration, reaction);
    Eigen::VectorXd qdd(a.num_dofs());
    qdd(a.free_dofs()) = qdd_f;
    if (!a.prescribed_dofs().empty()) qdd(a.prescribed_dofs()) = pm.acceleration;
    return qdd;
  }

 private:
  struct Rate {
    Eigen::VectorXd dq, dv;
  };

  Rate rate(double t, const GeneralizedState& st) const {
    Rate r{st.qdot, acceleration(t, st)};
    if (model_->assembly().floating_base())
      r.dq.head<6>() = chart_rate(st.q.head<6>(), st.qdot.head<6>());
    return r;
  }

  static GeneralizedState advanced(const GeneralizedState& st, const Rate& r, double h) {
    GeneralizedState s = st;
    s.q += h * r.dq;
    s.qdot += h * r.dv;
    return s;
  }

  void rk4(double t, double dt, GeneralizedState& st) const {
    const Rate k1 = rate(t, st);
    const Rate k2 = rate(t + 0.5 * dt, advanced(st, k1, 0.5 * dt));
    const Rate k3 = rate(t + 0.5 * dt, advanced(st, k2, 0.5 * dt));
    const Rate k4 = rate(t + dt, advanced(st, k3, dt));
    st.q += (dt / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    st.qdot += (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  }

  // Linearly implicit Euler: stiffness and damping taken at the new velocity,
  //   (M + dt D + dt^2 K) dv = dt (Q - dt K v),  q+ = q + dt v+.
  void implicit_euler(double t, double dt, GeneralizedState& st) const {
    const Assembly& a = model_->assembly();
    const auto& f = a.free_dofs();
    const auto& p = a.prescribed_dofs();
    model_->evaluate(st, t, terms_);
    const Eigen::MatrixXd& K = model_->stiffness();
    const Eigen::MatrixXd& D = model_->damping();
    Eigen::VectorXd rhs = dt * (terms_.Q - dt * (K * st.qdot));
    Eigen::VectorXd dv_p;
    if (!p.empty()) {
      const PrescribedMotion next = drive_->motion(a, t + dt);
      dv_p = next.velocity - st.qdot(p);
      rhs(f) -= terms_.M(f, p) * dv_p;
    }
    const Eigen::MatrixXd lhs = terms_.M(f, f) + dt * D(f, f) + dt * dt * K(f, f);
    Eigen::LLT<Eigen::MatrixXd> llt(lhs);
    if (llt.info() != Eigen::Success) throw std::runtime_error("implicit step: iteration matrix not positive definite");
    const Eigen::VectorXd dv_f = llt.solve(Eigen::VectorXd(rhs(f)));
    st.qdot(f) += dv_f;
    if (!p.empty()) st.qdot(p) += dv_p;
    Eigen::VectorXd dq = st.qdot;
    if (a.floating_base()) dq.head<6>() = chart_rate(st.q.head<6>(), st.qdot.head<6>());
    st.q += dt * dq;
  }

  const TwinModel* model_;
  MotorDrive* drive_;
  mutable DynamicsTerms terms_;
};

/// Called at the control rate; may issue new motor commands to the drive.
using ControlCallback = std::function<void(double t, const GeneralizedState&, MotorDrive&)>;
/// Called at the logging rate (including t = 0 and the final time).
using LogCallback = std::function<void(double t, const GeneralizedState&)>;

inline int ticks_per(double rate, double dt) {
  if (!(rate > 0.0)) return 0;
  return std::max(1, static_cast<int>(std::lround(1.0 / (rate * dt))));
}

/// Fixed-step simulation loop. Control is applied before the step at each
/// control tick (zero-order hold); logging follows the control update.
inline GeneralizedState simulate(const TwinModel& model, MotorDrive& drive, GeneralizedState st,
                                 const IntegratorConfig& cfg, const ControlCallback& control = {},
                                 const LogCallback& log = {}) {
  if (!(cfg.dt > 0.0) || !(cfg.t_end >= 0.0)) throw std::invalid_argument("bad integrator settings");
  const Assembly& a = model.assembly();
  const TwinIntegrator integ(model, drive);
  const long steps = std::lround(cfg.t_end / cfg.dt);
  const int control_every = ticks_per(cfg.control_rate, cfg.dt);
  const int log_every = ticks_per(cfg.log_rate, cfg.dt);
  st.normalize(a);
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (control && control_every > 0 && k % control_every == 0) {
      control(t, st, drive);
      drive.impose(a, t, st);
    }
    if (log && (k % log_every == 0 || k == steps)) log(t, st);
    if (k == steps) break;
    try {
      integ.step(t, cfg.dt, st, cfg.kind);
    } catch (const SingularMassMatrix& e) {
      throw IntegrationError(std::string("singular mass matrix: ") + e.what(), t, st);
    }
    if (!st.q.allFinite() || !st.qdot.allFinite() || !st.base.p.allFinite() ||
        st.qdot.cwiseAbs().maxCoeff() > cfg.max_speed) {
      std::ostringstream os;
      os << "integrator diverged at t = " << t + cfg.dt << " s (" << to_string(cfg.kind) << ", dt = " << cfg.dt << ")";
      throw IntegrationError(os.str(), t + cfg.dt, st);
    }
  }
  return st;
}

}  // namespace zodiaq
