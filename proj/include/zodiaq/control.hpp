#pragma once

// Shell-only 6-DoF plant, flat-output PD law and pair-based allocation.
//
// Flat outputs are sigma = (x, y, z, psi) of the centre of mass. Each pair of
// opposite-face motors is one signed channel Omega_j = w_a^2 - w_b^2, and only
// one motor of a pair spins at a time.

#include "zodiaq/assembly.hpp"
#include "zodiaq/hydro.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zodiaq {

inline constexpr int kNumPairs = kNumFaces / 2;

using MotorSpeeds = std::array<double, kNumFaces>;  // rad/s, signed, indexed by motor - 1
using Vec4 = Eigen::Vector4d;

struct SimpleModelParams {
  /// Rigid-body plus added inertia about the centre of mass, (angular; linear).
  Mat6 inertia = Mat6::Identity();
  double mass = 10.75;
  /// Displaced water mass; equals `mass` for a neutral build.
  double buoyancy_mass = 10.75;
  /// Centre of buoyancy sits d_cg above the centre of mass.
  double d_cg = 0.035;
  double gravity = 9.81;
  /// Face centres relative to the centre of mass and outward normals, body axes.
  std::array<Vec3, kNumFaces> face_center{};
  std::array<Vec3, kNumFaces> face_normal{};
  double c_thrust = 3e-4;    // N s^2 / rad^2
  double c_reaction = 1e-5;  // N m s^2 / rad^2
  std::array<int, kNumFaces> spin{};
  std::array<std::pair<int, int>, kNumPairs> pairs{{{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}}};
  double omega_max = 130.0 * 2.0 * M_PI / 60.0;
  double cap_fraction = 0.8;
  /// Body-frame drag at the centre of mass: F_i = -q_i |eta_i| eta_i - l_i eta_i.
  Vec6 quadratic_drag = Vec6(0.02, 0.02, 0.02, 60.0, 60.0, 60.0);
  Vec6 linear_drag = Vec6(0.1, 0.1, 0.02, 0.0, 0.0, 0.0);

  double cap() const { return cap_fraction * omega_max; }
  std::size_t face(int motor) const { return static_cast<std::size_t>(motor - 1); }
};

/// Problems found in a parameter set; empty when valid.
inline std::vector<std::string> check(const SimpleModelParams& p) {
  std::vector<std::string> out;
  if (!(p.c_thrust > 0.0)) out.push_back("c_thrust must be positive");
  if (p.c_reaction < 0.0) out.push_back("c_reaction must be non-negative");
  if (!(p.omega_max > 0.0)) out.push_back("omega_max must be positive");
  if (!(p.cap_fraction > 0.0) || p.cap_fraction > 1.0) out.push_back("cap_fraction must lie in (0, 1]");
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (p.inertia + p.inertia.transpose()));
  if ((p.inertia - p.inertia.transpose()).norm() > 1e-9 * p.inertia.norm() || es.eigenvalues().minCoeff() <= 0.0)
    out.push_back("inertia is not symmetric positive definite");
  for (int m = 1; m <= kNumFaces; ++m)
    if (p.spin[p.face(m)] != 1 && p.spin[p.face(m)] != -1) out.push_back("spin of M" + std::to_string(m) + " must be +1 or -1");
  std::array<int, kNumFaces> seen{};
  for (int j = 0; j < kNumPairs; ++j) {
    const auto [a, b] = p.pairs[static_cast<std::size_t>(j)];
    const std::string tag = "pair " + std::to_string(j + 1) + " (M" + std::to_string(a) + ", M" + std::to_string(b) + ")";
    if (a < 1 || a > kNumFaces || b < 1 || b > kNumFaces || a == b) {
      out.push_back(tag + ": invalid motor numbers");
      continue;
    }
    ++seen[p.face(a)];
    ++seen[p.face(b)];
    if ((p.face_normal[p.face(a)] + p.face_normal[p.face(b)]).norm() > 1e-9) out.push_back(tag + ": faces are not antiparallel");
    if (p.spin[p.face(a)] != p.spin[p.face(b)]) out.push_back(tag + ": motors of a pair must share a spin direction");
  }
  for (int m = 1; m <= kNumFaces; ++m)
    if (seen[p.face(m)] != 1) out.push_back("M" + std::to_string(m) + " must belong to exactly one pair");
  return out;
}

inline void validate(const SimpleModelParams& p) {
  const auto issues = check(p);
  if (!issues.empty()) throw std::invalid_argument(issues.front());
}

/// Resultant wrench at the centre of mass of the commanded motor speeds.
inline Wrench motor_wrench(const MotorSpeeds& omega, const SimpleModelParams& p) {
  Wrench w = Wrench::Zero();
  for (int m = 1; m <= kNumFaces; ++m) {
    const double om = omega[p.face(m)];
    if (!std::isfinite(om) || std::abs(om) > p.omega_max * (1.0 + 1e-12))
      throw std::out_of_range("M" + std::to_string(m) + " speed exceeds omega_max");
    if (om == 0.0) continue;
    const Vec3& n = p.face_normal[p.face(m)];
    const Vec3 f = -p.c_thrust * om * om * n;
    const double sgn = om > 0.0 ? 1.0 : -1.0;
    w.head<3>() += p.face_center[p.face(m)].cross(f) - sgn * p.c_reaction * om * om * n;
    w.tail<3>() += f;
  }
  return w;
}

/// Column j: wrench per unit Omega_j (first motor of pair j spinning in its
/// predefined direction).
inline Mat6 allocation_matrix(const SimpleModelParams& p) {
  Mat6 a;
  for (int j = 0; j < kNumPairs; ++j) {
    MotorSpeeds w{};
    const int m = p.pairs[static_cast<std::size_t>(j)].first;
    w[p.face(m)] = p.spin[p.face(m)];
    a.col(j) = motor_wrench(w, p);
  }
  return a;
}

/// Pure-yaw moment per unit of the largest pair throttle; zero when the
/// allocation matrix is singular.
inline double yaw_authority(const SimpleModelParams& p) {
  const Eigen::FullPivLU<Mat6> lu(allocation_matrix(p));
  if (!lu.isInvertible()) return 0.0;
  const Vec6 om = lu.solve(Vec6::Unit(2));
  return 1.0 / om.cwiseAbs().maxCoeff();
}

/// Spin directions (one per pair, shared by both motors) maximising yaw
/// authority; ties go to the first pattern in enumeration order.
inline std::array<int, kNumFaces> default_spin_directions(SimpleModelParams p) {
  std::array<int, kNumFaces> best{};
  double best_auth = -1.0;
  for (int mask = 0; mask < (1 << (kNumPairs - 1)); ++mask) {
    for (int j = 0; j < kNumPairs; ++j) {
      const int s = (j > 0 && (mask >> (j - 1)) & 1) ? -1 : 1;
      const auto [a, b] = p.pairs[static_cast<std::size_t>(j)];
      p.spin[p.face(a)] = s;
      p.spin[p.face(b)] = s;
    }
    const double auth = yaw_authority(p);
    if (auth > best_auth * (1.0 + 1e-9)) {
      best_auth = auth;
      best = p.spin;
    }
  }
  return best;
}

/// Shell-only parameters matching a twin build: face table from the shell,
/// inertia from the twin's generalized mass matrix at the reference
/// configuration (rotating modules and added mass included), drag from the
/// shell drag model.
inline SimpleModelParams simple_params_from(const ZodiaqBuild& b, const HydroParams& hydro, const Mat6& base_inertia,
                                            double c_thrust, double c_reaction) {
  SimpleModelParams p;
  const ZodiaqParams& zp = b.params;
  const Vec3 cm(0.0, 0.0, -zp.d_cg);
  p.mass = zp.total_mass;
  p.buoyancy_mass = zp.total_mass + zp.net_buoyancy_mass;
  p.d_cg = zp.d_cg;
  p.gravity = hydro.gravity;
  for (int m = 1; m <= kNumFaces; ++m) {
    p.face_center[p.face(m)] = b.shell.face(m).center - cm;
    p.face_normal[p.face(m)] = b.shell.face(m).normal;
  }
  // Base inertia is about the shell frame origin; move it to the centre of mass.
  const Mat6 ad = adjoint(Pose::translation(cm));
  p.inertia = ad.transpose() * base_inertia * ad;
  p.inertia = 0.5 * (p.inertia + p.inertia.transpose());
  for (int i = 0; i < 6; ++i) {
    p.quadratic_drag[i] = hydro.shell_drag(i, i);
    p.linear_drag[i] = hydro.shell_linear_drag(i, i);
  }
  p.c_thrust = c_thrust;
  p.c_reaction = c_reaction;
  p.omega_max = zp.omega_max();
  p.spin = default_spin_directions(p);
  return p;
}

// ---------------------------------------------------------------------------
// Plant

/// Centre-of-mass state: world position, roll-pitch-yaw and body twist.
struct SimpleState {
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
  Twist twist = Twist::Zero();

  Mat3 rotation() const { return rotation_from_euler(rpy); }
  Vec3 world_velocity() const { return rotation() * twist.tail<3>(); }
  double yaw_rate() const { return (euler_rate_matrix(rpy) * twist.head<3>()).z(); }
};

struct SimpleDerivative {
  Vec3 position;
  Vec3 rpy;
  Twist twist;
};

class GimbalLock : public std::runtime_error {
 public:
  explicit GimbalLock(double pitch)
      : std::runtime_error("pitch " + std::to_string(pitch * 180.0 / M_PI) + " deg is within 10 deg of gimbal lock"), theta(pitch) {}
  double theta;
};

/// Hydrostatic wrench (weight at the centre of mass, buoyancy d_cg above it).
inline Wrench simple_hydrostatics(const SimpleState& s, const SimpleModelParams& p) {
  const Vec3 down = s.rotation().transpose() * Vec3(0.0, 0.0, -p.gravity);
  const Vec3 lift = -p.buoyancy_mass * down;
  return make_twist(Vec3(0.0, 0.0, p.d_cg).cross(lift), p.mass * down + lift);
}

inline Wrench simple_drag(const Twist& eta, const SimpleModelParams& p) {
  Wrench w;
  for (int i = 0; i < 6; ++i) w[i] = -p.quadratic_drag[i] * std::abs(eta[i]) * eta[i] - p.linear_drag[i] * eta[i];
  return w;
}

inline SimpleDerivative simple_forward(const SimpleState& s, const MotorSpeeds& omega, const SimpleModelParams& p,
                                       const Wrench& disturbance = Wrench::Zero()) {
  if (std::abs(s.rpy.y()) > 80.0 * M_PI / 180.0) throw GimbalLock(s.rpy.y());
  const Wrench f = motor_wrench(omega, p) + simple_hydrostatics(s, p) + simple_drag(s.twist, p) + disturbance +
                   ad_transpose_apply(s.twist, p.inertia * s.twist);
  return {s.world_velocity(), euler_rate_matrix(s.rpy) * s.twist.head<3>(), p.inertia.ldlt().solve(f)};
}

inline SimpleState simple_rk4(const SimpleState& s, const MotorSpeeds& omega, const SimpleModelParams& p, double dt,
                              const Wrench& disturbance = Wrench::Zero()) {
  auto add = [](const SimpleState& a, const SimpleDerivative& d, double h) {
    return SimpleState{a.position + h * d.position, a.rpy + h * d.rpy, a.twist + h * d.twist};
  };
  const SimpleDerivative k1 = simple_forward(s, omega, p, disturbance);
  const SimpleDerivative k2 = simple_forward(add(s, k1, 0.5 * dt), omega, p, disturbance);
  const SimpleDerivative k3 = simple_forward(add(s, k2, 0.5 * dt), omega, p, disturbance);
  const SimpleDerivative k4 = simple_forward(add(s, k3, dt), omega, p, disturbance);
  SimpleState out = s;
  out.position += dt / 6.0 * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
  out.rpy += dt / 6.0 * (k1.rpy + 2.0 * k2.rpy + 2.0 * k3.rpy + k4.rpy);
  out.twist += dt / 6.0 * (k1.twist + 2.0 * k2.twist + 2.0 * k3.twist + k4.twist);
  return out;
}

/// Centre-of-mass state of the twin's shell.
inline SimpleState shell_state(const Assembly& a, const GeneralizedState& st, double d_cg) {
  const Vec3 cm(0.0, 0.0, -d_cg);
  const Pose g = st.base_pose(a);
  const Twist eta = st.qdot.head<6>();
  SimpleState s;
  s.position = g * cm;
  s.rpy = euler_from_rotation(g.R);
  s.twist = make_twist(eta.head<3>(), eta.tail<3>() + eta.head<3>().cross(cm));
  return s;
}

// ---------------------------------------------------------------------------
// Reference and control law

enum class AxisMode { closed_loop, open_loop };

struct FlatSample {
  Vec4 position = Vec4::Zero();  // x, y, z, psi
  Vec4 velocity = Vec4::Zero();
  Vec4 acceleration = Vec4::Zero();
};

/// Desired flat outputs with derivatives. Planar axes may be open loop, in
/// which case only the commanded acceleration is used.
class FlatReference {
 public:
  using Fn = std::function<FlatSample(double)>;

  FlatReference(Fn fn, double duration, std::array<AxisMode, 2> planar = {AxisMode::closed_loop, AxisMode::closed_loop},
                bool check_derivatives = true)
      : fn_(std::move(fn)), duration_(duration), planar_(planar) {
    if (check_derivatives) verify();
  }

  FlatSample operator()(double t) const { return fn_(t); }
  double duration() const { return duration_; }
  AxisMode planar_mode(int axis) const { return planar_[static_cast<std::size_t>(axis)]; }

 private:
  // Central differences at interior points; references are piecewise smooth,
  // so samples straddling a switching time are skipped.
  void verify() const {
    const int n = 37;
    const double h = 1e-5;
    for (int i = 1; i < n; ++i) {
      const double t = duration_ * i / n;
      const FlatSample a = fn_(t - h), b = fn_(t + h), c = fn_(t);
      const Vec4 dv = (b.position - a.position) / (2.0 * h);
      const Vec4 da = (b.velocity - a.velocity) / (2.0 * h);
      const bool jump = (b.acceleration - a.acceleration).norm() > 1e-3 * (1.0 + c.acceleration.norm());
      if (jump) continue;
      for (int k = 0; k < 4; ++k) {
        const bool open = k < 2 && planar_[static_cast<std::size_t>(k)] == AxisMode::open_loop;
        if (!open && std::abs(dv[k] - c.velocity[k]) > 1e-5 * (1.0 + std::abs(c.velocity[k])))
          throw std::invalid_argument("reference velocity inconsistent with position at t = " + std::to_string(t));
        if (!open && std::abs(da[k] - c.acceleration[k]) > 1e-4 * (1.0 + std::abs(c.acceleration[k])))
          throw std::invalid_argument("reference acceleration inconsistent with velocity at t = " + std::to_string(t));
      }
    }
  }

  Fn fn_;
  double duration_;
  std::array<AxisMode, 2> planar_;
};

inline FlatReference hold_reference(const Vec4& sigma, double duration) {
  return FlatReference([sigma](double) { return FlatSample{sigma, Vec4::Zero(), Vec4::Zero()}; }, duration);
}

/// Step of `delta` applied at t_step on top of sigma0.
inline FlatReference step_reference(const Vec4& sigma0, const Vec4& delta, double t_step, double duration) {
  return FlatReference(
      [=](double t) { return FlatSample{t < t_step ? sigma0 : Vec4(sigma0 + delta), Vec4::Zero(), Vec4::Zero()}; },
      duration, {AxisMode::closed_loop, AxisMode::closed_loop}, false);
}

/// Planar semicircle of given radius traversed at constant angular rate,
/// starting at `start` heading along +x and turning left; z and psi held.
inline FlatReference semicircle_reference(const Vec4& start, double radius, double duration) {
  if (!(radius > 0.0) || !(duration > 0.0)) throw std::invalid_argument("semicircle needs positive radius and duration");
  const double w = M_PI / duration;
  return FlatReference(
      [=](double t) {
        const double tc = std::clamp(t, 0.0, duration);
        const double th = w * tc;
        const bool moving = t >= 0.0 && t <= duration;
        FlatSample s;
        s.position = start + Vec4(radius * std::sin(th), radius * (1.0 - std::cos(th)), 0.0, 0.0);
        if (moving) {
          s.velocity = Vec4(radius * w * std::cos(th), radius * w * std::sin(th), 0.0, 0.0);
          s.acceleration = Vec4(-radius * w * w * std::sin(th), radius * w * w * std::cos(th), 0.0, 0.0);
        }
        return s;
      },
      duration);
}

/// Open-loop planar legs: each leg commands a constant planar acceleration
/// for `leg_time`; z and psi are held at their initial values.
inline FlatReference planar_legs_reference(const Vec4& start, const std::vector<Eigen::Vector2d>& accel, double leg_time) {
  if (accel.empty() || !(leg_time > 0.0)) throw std::invalid_argument("planar legs need at least one leg and positive duration");
  const double duration = leg_time * static_cast<double>(accel.size());
  return FlatReference(
      [=](double t) {
        FlatSample s;
        s.position = start;
        const auto k = static_cast<std::size_t>(std::clamp(std::floor(t / leg_time), 0.0, static_cast<double>(accel.size() - 1)));
        if (t >= 0.0 && t < duration) s.acceleration.head<2>() = accel[k];
        return s;
      },
      duration, {AxisMode::open_loop, AxisMode::open_loop});
}

struct PdGains {
  Vec4 kp = Vec4::Constant(1.0);
  Vec4 kd = Vec4::Constant(2.0);
};

/// nu = sigma_dd_ref + Kd (sigma_d_ref - sigma_d) + Kp (sigma_ref - sigma) on
/// closed-loop outputs; open-loop planar outputs pass the commanded
/// acceleration through. The yaw error is wrapped to (-pi, pi].
inline Vec4 flat_pd_controller(const SimpleState& s, const FlatSample& ref, const FlatReference& r, const PdGains& g) {
  if ((g.kp.array() <= 0.0).any() || (g.kd.array() <= 0.0).any()) throw std::invalid_argument("PD gains must be positive");
  Vec4 sigma, sigma_dot;
  const Vec3 v = s.world_velocity();
  sigma << s.position, s.rpy.z();
  sigma_dot << v, s.yaw_rate();
  Vec4 e = ref.position - sigma;
  e[3] = wrap_angle(e[3]);
  Vec4 nu = ref.acceleration + g.kd.cwiseProduct(ref.velocity - sigma_dot) + g.kp.cwiseProduct(e);
  for (int k = 0; k < 2; ++k)
    if (r.planar_mode(k) == AxisMode::open_loop) nu[k] = ref.acceleration[k];
  return nu;
}

/// Desired wrench at the centre of mass: inertia times the desired body
/// accelerations plus compensation of hydrostatic force, drag and gyroscopic
/// terms; roll and pitch moments are left to the passive restoring moment.
inline Wrench wrench_from_nu(const Vec4& nu, const SimpleState& s, const SimpleModelParams& p) {
  const Mat3 rt = s.rotation().transpose();
  const Twist accel = make_twist(Vec3(0.0, 0.0, nu[3]), rt * nu.head<3>());
  Wrench f = p.inertia * accel;
  f -= simple_drag(s.twist, p);
  f -= ad_transpose_apply(s.twist, p.inertia * s.twist);
  f.tail<3>() -= simple_hydrostatics(s, p).tail<3>();
  f[0] = 0.0;
  f[1] = 0.0;
  return f;
}

struct Allocation {
  Vec6 pair_input = Vec6::Zero();  // Omega, rad^2/s^2
  MotorSpeeds omega{};
  std::array<bool, kNumPairs> saturated{};
  bool any_saturated() const {
    for (bool b : saturated)
      if (b) return true;
    return false;
  }
};

/// Allocation from a desired wrench to capped, pair-exclusive motor speeds.
///
/// A singular matrix is a configuration error unless `least_squares` is set,
/// in which case the minimum-norm throttles are used (e.g. without reaction
/// torques nothing produces yaw and the matrix has rank 5).
class Allocator {
 public:
  explicit Allocator(const SimpleModelParams& p, bool least_squares = false)
      : p_(p), a_(allocation_matrix(p)), lu_(a_), cod_(a_) {
    validate(p);
    singular_ = !lu_.isInvertible();
    if (singular_ && !least_squares) throw std::invalid_argument("allocation matrix is singular");
    Eigen::JacobiSVD<Mat6> svd(a_);
    const double lo = svd.singularValues()(5);
    cond_ = lo > 0.0 ? svd.singularValues()(0) / lo : std::numeric_limits<double>::infinity();
  }

  const Mat6& matrix() const { return a_; }
  double condition_number() const { return cond_; }
  bool singular() const { return singular_; }
  const SimpleModelParams& params() const { return p_; }

  Allocation operator()(const Wrench& f) const {
    Allocation out;
    out.pair_input = singular_ ? Vec6(cod_.solve(f)) : Vec6(lu_.solve(f));
    const double cap = p_.cap();
    for (int j = 0; j < kNumPairs; ++j) {
      const double om = out.pair_input[j];
      const auto [a, b] = p_.pairs[static_cast<std::size_t>(j)];
      const int m = om >= 0.0 ? a : b;
      const double speed = std::sqrt(std::abs(om));
      out.saturated[static_cast<std::size_t>(j)] = speed > cap;
      out.omega[p_.face(m)] = p_.spin[p_.face(m)] * std::min(speed, cap);
    }
    return out;
  }

 private:
  SimpleModelParams p_;
  Mat6 a_;
  Eigen::FullPivLU<Mat6> lu_;
  Eigen::CompleteOrthogonalDecomposition<Mat6> cod_;
  bool singular_ = false;
  double cond_ = 0.0;
};

/// Motor speeds giving the largest wrench along `direction` without
/// saturating any motor (the highest-demand motor sits exactly at the cap).
inline Allocation full_effort(const Allocator& alloc, const Wrench& direction) {
  const Allocation unit = alloc(direction);
  const double peak = unit.pair_input.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("zero wrench direction");
  const double cap = alloc.params().cap();
  Allocation out = alloc(direction * (cap * cap / peak));
  // Pin the limiting motor to the cap exactly (the square root may round below).
  for (double& w : out.omega)
    if (std::abs(std::abs(w) - cap) < 1e-9 * cap) w = std::copysign(cap, w);
  return out;
}

}  // namespace zodiaq
