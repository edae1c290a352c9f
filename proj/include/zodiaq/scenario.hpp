#pragma once

// Built-in scenarios. A scenario drives either the full twin or the shell-only
// model through one fixed-step loop: control at the control rate (held between
// ticks), logging at the log rate, metrics computed from the finished log.

#include "zodiaq/config.hpp"
#include "zodiaq/log.hpp"

#include <memory>
#include <random>

namespace zodiaq {

inline constexpr const char* kSummarySchema = "zodiaq-summary/1";

inline std::vector<std::string> log_columns() {
  std::vector<std::string> c = {"t",     "x",     "y",     "z",     "roll",  "pitch",   "yaw",  "vx",    "vy",
                                "vz",    "wx",    "wy",    "wz",    "ref_x", "ref_y",   "ref_z", "ref_yaw", "nu_x",
                                "nu_y",  "nu_z",  "nu_yaw", "fd_mx", "fd_my", "fd_mz", "fd_fx", "fd_fy", "fd_fz"};
  for (int j = 1; j <= kNumPairs; ++j) c.push_back("pair" + std::to_string(j));
  for (int m = 1; m <= kNumFaces; ++m) c.push_back("w" + std::to_string(m));
  c.push_back("saturated");
  for (int m = 1; m <= kNumFaces; ++m) c.push_back("tau" + std::to_string(m));
  for (const char* s : {"e_kinetic", "e_elastic", "e_potential", "q_rms", "qdot_rms"}) c.push_back(s);
  return c;
}

inline constexpr int kPlantDiagnostics = kNumFaces + 5;  // torques, energies, strain rms

// ---------------------------------------------------------------------------
// Plants

class Plant {
 public:
  virtual ~Plant() = default;
  /// Centre-of-mass state of the shell.
  virtual SimpleState shell() const = 0;
  virtual void command(double t, const MotorSpeeds& omega) = 0;
  virtual void step(double t, double dt) = 0;
  /// Motor torques, energy terms and rod strain statistics (NaN if not modelled).
  virtual std::array<double, kPlantDiagnostics> diagnostics(double t) const = 0;
};

inline Pose initial_pose(const ScenarioConfig& c) { return {rotation_from_euler(c.initial_rpy), c.initial_position}; }

class TwinPlant final : public Plant {
 public:
  TwinPlant(const ScenarioConfig& c, const std::vector<int>& removed)
      : build_(make_build(c.assembly, removed)),
        model_(build_.assembly, c.hydro, c.damping_beta, loads_from(c)),
        drive_(c.ramp_time),
        integ_(model_, drive_),
        st_(GeneralizedState::zero(build_.assembly, initial_pose(c))),
        kind_(c.integrator.kind),
        max_speed_(c.integrator.max_speed) {
    if (c.settle == "none") return;
    std::vector<int> unknowns;
    if (c.settle == "attitude") unknowns = {0, 1};
    for (const auto& m : build_.modules)
      if (m.flagellum >= 0)
        for (int k = 0; k < build_.assembly.link(m.flagellum).dof_count; ++k) unknowns.push_back(build_.assembly.link(m.flagellum).dof_offset + k);
    const double residual = static_equilibrium(model_, st_, unknowns, 1e-10);
    if (!(residual < 1e-6)) throw IntegrationError("initial settling did not converge (residual " + std::to_string(residual) + ")", 0.0, st_);
    st_.normalize(build_.assembly);
  }

  TwinPlant(const TwinPlant&) = delete;
  TwinPlant& operator=(const TwinPlant&) = delete;

  const ZodiaqBuild& build() const { return build_; }
  const TwinModel& model() const { return model_; }
  const GeneralizedState& state() const { return st_; }

  SimpleState shell() const override { return shell_state(build_.assembly, st_, build_.params.d_cg); }

  void command(double t, const MotorSpeeds& omega) override {
    drive_.command(t, omega);
    drive_.impose(build_.assembly, t, st_);
  }

  void step(double t, double dt) override {
    try {
      integ_.step(t, dt, st_, kind_);
    } catch (const SingularMassMatrix& e) {
      throw IntegrationError(std::string("singular mass matrix: ") + e.what(), t, st_);
    } catch (const std::runtime_error& e) {
      throw IntegrationError(e.what(), t, st_);
    }
    if (!st_.q.allFinite() || !st_.qdot.allFinite() || !st_.base.p.allFinite() || st_.qdot.cwiseAbs().maxCoeff() > max_speed_) {
      std::ostringstream os;
      os << "integrator diverged at t = " << t + dt << " s (" << to_string(kind_) << ", dt = " << dt << ")";
      throw IntegrationError(os.str(), t + dt, st_);
    }
  }

  std::array<double, kPlantDiagnostics> diagnostics(double t) const override {
    std::array<double, kPlantDiagnostics> out{};
    const Assembly& a = build_.assembly;
    Eigen::VectorXd reaction;
    integ_.acceleration(t, st_, &reaction);
    const auto& p = a.prescribed_dofs();
    for (std::size_t k = 0; k < p.size(); ++k)
      out[static_cast<std::size_t>(MotorDrive::motor_of(a, p[k]) - 1)] = reaction[static_cast<Eigen::Index>(k)];
    const EnergyTerms e = model_.energy(st_);
    out[kNumFaces] = e.kinetic;
    out[kNumFaces + 1] = e.elastic;
    out[kNumFaces + 2] = e.potential;
    double q2 = 0.0, v2 = 0.0;
    int n = 0;
    for (int dof : a.free_dofs()) {
      if (dof < 6) continue;
      q2 += st_.q[dof] * st_.q[dof];
      v2 += st_.qdot[dof] * st_.qdot[dof];
      ++n;
    }
    out[kNumFaces + 3] = n ? std::sqrt(q2 / n) : 0.0;
    out[kNumFaces + 4] = n ? std::sqrt(v2 / n) : 0.0;
    return out;
  }

 private:
  static ZodiaqBuild make_build(ZodiaqParams p, const std::vector<int>& removed) {
    p.removed = removed;
    return assemble_zodiaq(p);
  }

  static std::vector<PointLoad> loads_from(const ScenarioConfig& c) {
    std::vector<PointLoad> out;
    for (const Disturbance& d : c.disturbances) out.push_back({0, make_twist(d.moment, d.force), d.t_begin, d.t_end});
    return out;
  }

  ZodiaqBuild build_;
  TwinModel model_;
  MotorDrive drive_;
  TwinIntegrator integ_;
  GeneralizedState st_;
  IntegratorKind kind_;
  double max_speed_;
};

/// Body wrench at the centre of mass equivalent to a world wrench applied at
/// the shell centre (d_cg above the centre of mass).
inline Wrench disturbance_at_cm(const SimpleState& s, const Disturbance& d, double d_cg) {
  const Mat3 r = s.rotation();
  const Vec3 arm = r * Vec3(0.0, 0.0, d_cg);
  return make_twist(r.transpose() * (d.moment + arm.cross(d.force)), r.transpose() * d.force);
}

class SimplePlant final : public Plant {
 public:
  SimplePlant(const ScenarioConfig& c, SimpleModelParams p) : p_(std::move(p)), disturbances_(c.disturbances) {
    const Pose g = initial_pose(c);
    s_.position = g * Vec3(0.0, 0.0, -p_.d_cg);
    s_.rpy = c.initial_rpy;
  }

  const SimpleModelParams& params() const { return p_; }
  SimpleState shell() const override { return s_; }
  void command(double, const MotorSpeeds& omega) override { omega_ = omega; }

  void step(double t, double dt) override {
    Wrench dist = Wrench::Zero();
    for (const Disturbance& d : disturbances_)
      if (t >= d.t_begin && t < d.t_end) dist += disturbance_at_cm(s_, d, p_.d_cg);
    try {
      s_ = simple_rk4(s_, omega_, p_, dt, dist);
    } catch (const GimbalLock& e) {
      throw IntegrationError(e.what(), t, {});
    }
    if (!s_.position.allFinite() || !s_.twist.allFinite()) throw IntegrationError("simple plant diverged", t + dt, {});
  }

  std::array<double, kPlantDiagnostics> diagnostics(double) const override {
    std::array<double, kPlantDiagnostics> out;
    out.fill(std::nan(""));
    const double kinetic = 0.5 * s_.twist.dot(p_.inertia * s_.twist);
    out[kNumFaces] = kinetic;
    out[kNumFaces + 1] = 0.0;
    out[kNumFaces + 2] = (p_.mass - p_.buoyancy_mass) * p_.gravity * s_.position.z();
    return out;
  }

 private:
  SimpleModelParams p_;
  SimpleState s_;
  MotorSpeeds omega_{};
  std::vector<Disturbance> disturbances_;
};

// ---------------------------------------------------------------------------
// Controller

/// Simple-model parameters the controller uses: geometry and inertia of the
/// intact twin (the controller is never told about removed modules).
inline SimpleModelParams controller_model(const ScenarioConfig& c) {
  ZodiaqParams zp = c.assembly;
  zp.removed.clear();
  const ZodiaqBuild b = assemble_zodiaq(zp);
  const TwinModel m(b.assembly, c.hydro, c.damping_beta);
  const Mat6 base = m.mass_matrix(GeneralizedState::zero(b.assembly)).topLeftCorner<6, 6>();
  SimpleModelParams p = simple_params_from(b, c.hydro, base, c.controller.c_thrust, c.controller.c_reaction);
  p.pairs = c.controller.pairs;
  p.cap_fraction = c.controller.cap_fraction;
  if (c.controller.inertia) p.inertia = *c.controller.inertia;
  p.spin = c.controller.spin ? *c.controller.spin : default_spin_directions(p);
  return p;
}

struct ControlOutput {
  FlatSample reference;
  Vec4 nu = Vec4::Constant(std::nan(""));
  Wrench desired = Wrench::Constant(std::nan(""));
  Allocation allocation;
  bool closed_loop = false;
};

/// Flat PD law + wrench mapping + allocation, with optional sensor noise on
/// depth and yaw drawn from a seeded generator.
class FlatController {
 public:
  FlatController(const SimpleModelParams& p, const ControllerSettings& s, FlatReference ref, std::uint64_t seed)
      : alloc_(p, s.least_squares), gains_(s.gains), ref_(std::move(ref)), rng_(seed), depth_noise_(s.depth_noise), yaw_noise_(s.yaw_noise) {}

  const Allocator& allocator() const { return alloc_; }
  const FlatReference& reference() const { return ref_; }

  ControlOutput operator()(double t, SimpleState s) {
    if (depth_noise_ > 0.0) s.position.z() += std::normal_distribution<double>(0.0, depth_noise_)(rng_);
    if (yaw_noise_ > 0.0) s.rpy.z() += std::normal_distribution<double>(0.0, yaw_noise_)(rng_);
    ControlOutput out;
    out.closed_loop = true;
    out.reference = ref_(t);
    out.nu = flat_pd_controller(s, out.reference, ref_, gains_);
    out.desired = wrench_from_nu(out.nu, s, alloc_.params());
    out.allocation = alloc_(out.desired);
    return out;
  }

 private:
  Allocator alloc_;
  PdGains gains_;
  FlatReference ref_;
  std::mt19937_64 rng_;
  double depth_noise_, yaw_noise_;
};

// ---------------------------------------------------------------------------
// Loop

struct ActuationStats {
  int control_ticks = 0;
  double max_roundtrip_error = 0.0;  // relative, unsaturated closed-loop ticks
};

using ControlFn = std::function<ControlOutput(double t, const SimpleState&)>;

inline TimeSeriesLog run_loop(Plant& plant, const ScenarioConfig& c, double duration, const ControlFn& control,
                              const std::string& hash, ActuationStats& stats, const SimpleModelParams* model = nullptr) {
  const double dt = c.integrator.dt;
  const long steps = std::lround(duration / dt);
  const int control_every = ticks_per(c.integrator.control_rate, dt);
  const int log_every = ticks_per(c.integrator.log_rate, dt);
  TimeSeriesLog log(log_columns(), hash);
  ControlOutput last;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (k % control_every == 0) {
      last = control(t, plant.shell());
      plant.command(t, last.allocation.omega);
      ++stats.control_ticks;
      if (model && last.closed_loop && !last.allocation.any_saturated()) {
        const Wrench produced = motor_wrench(last.allocation.omega, *model);
        const Wrench requested = allocation_matrix(*model) * last.allocation.pair_input;
        const double err = (produced - requested).norm() / std::max(requested.norm(), 1e-300);
        if (requested.norm() > 0.0) stats.max_roundtrip_error = std::max(stats.max_roundtrip_error, err);
      }
    }
    if (k % log_every == 0 || k == steps) {
      const SimpleState s = plant.shell();
      std::vector<double> row;
      row.reserve(log.columns().size());
      const Vec3 v = s.world_velocity();
      row.push_back(t);
      for (int i = 0; i < 3; ++i) row.push_back(s.position[i]);
      for (int i = 0; i < 3; ++i) row.push_back(s.rpy[i]);
      for (int i = 0; i < 3; ++i) row.push_back(v[i]);
      for (int i = 0; i < 3; ++i) row.push_back(s.twist[i]);
      for (int i = 0; i < 4; ++i) row.push_back(last.closed_loop ? last.reference.position[i] : std::nan(""));
      for (int i = 0; i < 4; ++i) row.push_back(last.nu[i]);
      for (int i = 0; i < 6; ++i) row.push_back(last.desired[i]);
      for (int i = 0; i < kNumPairs; ++i) row.push_back(last.closed_loop ? last.allocation.pair_input[i] : std::nan(""));
      for (double w : last.allocation.omega) row.push_back(w);
      int sat = 0;
      for (bool b : last.allocation.saturated) sat += b;
      row.push_back(sat);
      for (double d : plant.diagnostics(t)) row.push_back(d);
      log.append(std::move(row));
    }
    if (k == steps) break;
    plant.step(t, dt);
  }
  return log;
}

/// Open-loop program: the listed motors at constant speed from t = 0.
inline ControlFn open_loop(const ScenarioConfig& c) {
  MotorSpeeds w{};
  for (const MotorRun& r : c.motors) w[static_cast<std::size_t>(r.motor - 1)] = c.spin_sign(r.ccw) * r.rpm * 2.0 * M_PI / 60.0;
  return [w](double, const SimpleState&) {
    ControlOutput out;
    out.allocation.omega = w;
    return out;
  };
}

// ---------------------------------------------------------------------------
// Metrics (all computed from logs)

inline Vec4 flat_at(const TimeSeriesLog& log, std::size_t i) {
  return {log.at(i, "x"), log.at(i, "y"), log.at(i, "z"), log.at(i, "yaw")};
}

/// Cap compliance and pair exclusivity over every logged row.
inline json actuation_metrics(const TimeSeriesLog& log, const SimpleModelParams& p) {
  const double cap = p.cap();
  double max_w = 0.0;
  int saturated_rows = 0, exclusivity = 0, above_cap = 0;
  bool cap_exact = true;
  for (std::size_t i = 0; i < log.size(); ++i) {
    double row_max = 0.0;
    for (int m = 1; m <= kNumFaces; ++m) row_max = std::max(row_max, std::abs(log.at(i, "w" + std::to_string(m))));
    max_w = std::max(max_w, row_max);
    if (row_max > cap) ++above_cap;
    if (log.at(i, "saturated") > 0) {
      ++saturated_rows;
      if (row_max != cap) cap_exact = false;
    }
    for (const auto& [a, b] : p.pairs)
      if (log.at(i, "w" + std::to_string(a)) * log.at(i, "w" + std::to_string(b)) != 0.0) ++exclusivity;
  }
  return {{"cap_rad_s", cap},
          {"max_abs_omega", max_w},
          {"rows_above_cap", above_cap},
          {"saturated_rows", saturated_rows},
          {"cap_exact_at_saturation", cap_exact},
          {"pair_exclusivity_violations", exclusivity}};
}

inline double max_abs_error(const TimeSeriesLog& log, const std::string& col, const std::string& ref, double t0 = 0.0,
                            bool angle = false) {
  double m = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.at(i, "t") < t0) continue;
    double e = log.at(i, col) - log.at(i, ref);
    if (angle) e = wrap_angle(e);
    if (std::isfinite(e)) m = std::max(m, std::abs(e));
  }
  return m;
}

inline double max_tilt_deg(const TimeSeriesLog& log) {
  double m = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i)
    m = std::max({m, std::abs(log.at(i, "roll")), std::abs(log.at(i, "pitch"))});
  return m * 180.0 / M_PI;
}

inline json regulation_metrics(const TimeSeriesLog& log) {
  const std::size_t n = log.size() - 1;
  return {{"max_depth_error_m", max_abs_error(log, "z", "ref_z")},
          {"max_yaw_error_deg", max_abs_error(log, "yaw", "ref_yaw", 0.0, true) * 180.0 / M_PI},
          {"final_depth_error_m", log.at(n, "z") - log.at(n, "ref_z")},
          {"final_yaw_error_deg", wrap_angle(log.at(n, "yaw") - log.at(n, "ref_yaw")) * 180.0 / M_PI},
          {"max_tilt_deg", max_tilt_deg(log)}};
}

/// Yaw change accumulated over the run (no wrapping at +-180 deg).
inline double unwrapped_yaw_change(const TimeSeriesLog& log) {
  double total = 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) total += wrap_angle(log.at(i, "yaw") - log.at(i - 1, "yaw"));
  return total;
}

inline json displacement_metrics(const TimeSeriesLog& log) {
  const Vec4 a = flat_at(log, 0), b = flat_at(log, log.size() - 1);
  return {{"dx_m", b[0] - a[0]},
          {"dy_m", b[1] - a[1]},
          {"dz_m", b[2] - a[2]},
          {"dyaw_deg", unwrapped_yaw_change(log) * 180.0 / M_PI},
          {"max_tilt_deg", max_tilt_deg(log)}};
}

/// Sign changes of a decaying signal, ignoring samples within `floor` of zero.
inline int crossings(const std::vector<double>& v, double floor) {
  int n = 0, last = 0;
  for (double x : v) {
    if (std::abs(x) <= floor) continue;
    const int s = x > 0.0 ? 1 : -1;
    if (last != 0 && s != last) ++n;
    last = s;
  }
  return n;
}

/// Decay of depth and tilt offsets toward the final state of the run.
inline json passive_metrics(const TimeSeriesLog& log) {
  const std::size_t n = log.size() - 1;
  json out;
  // Overshoots count crossings of the final value outside a band of 2% of the
  // initial offset.
  std::vector<double> z = log.column("z");
  const double z_end = z.back();
  for (double& x : z) x -= z_end;
  out["depth_offset_initial_m"] = z.front();
  out["depth_overshoots"] = crossings(z, 0.02 * std::abs(z.front()));

  std::vector<double> tilt(log.size());
  for (std::size_t i = 0; i <= n; ++i)
    tilt[i] = std::acos(std::clamp(std::cos(log.at(i, "roll")) * std::cos(log.at(i, "pitch")), -1.0, 1.0)) * 180.0 / M_PI;
  // Tilt is a magnitude, so an overshoot shows up as a dip through zero:
  // count sign changes of the roll-pitch direction instead.
  std::vector<double> lean(log.size());
  const double r0 = log.at(0, "roll"), p0 = log.at(0, "pitch");
  for (std::size_t i = 0; i <= n; ++i) lean[i] = (log.at(i, "roll") * r0 + log.at(i, "pitch") * p0) / std::hypot(r0, p0) * 180.0 / M_PI;
  const double lean_end = lean.back();
  for (double& x : lean) x -= lean_end;
  out["tilt_overshoots"] = crossings(lean, 0.02 * tilt.front());
  out["tilt_initial_deg"] = tilt.front();
  out["tilt_final_deg"] = tilt.back();
  out["final_z_m"] = log.at(n, "z");
  return out;
}

/// Mean planar speed over [t0, t1] from the endpoint displacement.
inline double planar_speed(const TimeSeriesLog& log, double t0, double t1) {
  std::size_t i0 = 0, i1 = log.size() - 1;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.at(i, "t") <= t0 + 1e-9) i0 = i;
    if (log.at(i, "t") <= t1 + 1e-9) i1 = i;
  }
  const double dt = log.at(i1, "t") - log.at(i0, "t");
  if (!(dt > 0.0)) return 0.0;
  return std::hypot(log.at(i1, "x") - log.at(i0, "x"), log.at(i1, "y") - log.at(i0, "y")) / dt;
}

/// Response of e'' = -kd e' - kp e, e(0) = 1, e'(0) = 0 (continuous PD on a
/// double integrator).
inline double pd_step_error(double kp, double kd, double t) {
  const double s = -0.5 * kd;
  const double disc = s * s - kp;
  // exp(A t) e0 for A = [[0, 1], [-kp, -kd]], first component.
  double c, sh;  // cosh-like and sinh-like/q terms
  if (std::abs(disc) < 1e-14) {
    c = 1.0;
    sh = t;
  } else if (disc > 0.0) {
    const double q = std::sqrt(disc);
    c = std::cosh(q * t);
    sh = std::sinh(q * t) / q;
  } else {
    const double q = std::sqrt(-disc);
    c = std::cos(q * t);
    sh = std::sin(q * t) / q;
  }
  return std::exp(s * t) * (c - s * sh);
}

/// Same loop with the PD output sampled every `period` and held (exact
/// discretization of the double integrator under zero-order hold).
inline double pd_step_error_sampled(double kp, double kd, double period, double t) {
  double e = 1.0, v = 0.0;
  double tk = 0.0;
  while (tk + period <= t + 1e-12) {
    const double a = -kp * e - kd * v;
    e += period * v + 0.5 * period * period * a;
    v += period * a;
    tk += period;
  }
  const double a = -kp * e - kd * v;
  const double tau = t - tk;
  return e + tau * v + 0.5 * tau * tau * a;
}

// ---------------------------------------------------------------------------
// Scenario runner

struct ScenarioResult {
  std::vector<std::pair<std::string, TimeSeriesLog>> logs;  // (suffix, log)
  json summary;
};

namespace detail {

inline Vec4 flat_state(const SimpleState& s) { return {s.position.x(), s.position.y(), s.position.z(), s.rpy.z()}; }

inline std::unique_ptr<Plant> make_plant(const ScenarioConfig& c, const SimpleModelParams& model, const std::vector<int>& removed) {
  if (c.plant == PlantKind::simple_model) return std::make_unique<SimplePlant>(c, model);
  return std::make_unique<TwinPlant>(c, removed);
}

inline json parameters_json(const ScenarioConfig& c) {
  json out = json::array();
  for (const ParameterRecord& r : parameter_records(c))
    out.push_back({{"path", r.path}, {"value", r.value}, {"provenance", to_string(r.provenance)}});
  return out;
}

}  // namespace detail

inline ScenarioResult run_scenario(const ScenarioConfig& c) {
  const std::string hash = config_hash(c.resolved);
  const SimpleModelParams model = controller_model(c);
  ScenarioResult res;
  json metrics = json::object();
  ActuationStats stats;

  auto closed_loop = [&](Plant& plant, FlatReference ref, double duration) {
    FlatController ctl(model, c.controller, std::move(ref), c.seed);
    return run_loop(plant, c, duration, [&](double t, const SimpleState& s) { return ctl(t, s); }, hash, stats, &model);
  };
  auto start_of = [&](const Plant& p) { return detail::flat_state(p.shell()); };

  const std::string& id = c.scenario;
  if (id == "openloop-fig2c" || id == "crawl-pattern" || id == "passive-stability") {
    auto plant = detail::make_plant(c, model, c.assembly.removed);
    const ControlFn program = id == "passive-stability" ? ControlFn([](double, const SimpleState&) { return ControlOutput{}; }) : open_loop(c);
    TimeSeriesLog log = run_loop(*plant, c, c.duration, program, hash, stats);
    metrics = displacement_metrics(log);
    if (id == "openloop-fig2c")
      metrics["paper"] = {{"dy_m", 0.74}, {"dz_m", 0.03}, {"dyaw_deg", 32.8}};
    if (id == "passive-stability") metrics.update(passive_metrics(log));
    res.logs.emplace_back("", std::move(log));
  } else if (id == "semicircle") {
    auto plant = detail::make_plant(c, model, c.assembly.removed);
    TimeSeriesLog log = closed_loop(*plant, semicircle_reference(start_of(*plant), c.radius, c.duration), c.duration);
    double sq = 0.0;
    for (std::size_t i = 0; i < log.size(); ++i)
      sq += std::pow(log.at(i, "x") - log.at(i, "ref_x"), 2) + std::pow(log.at(i, "y") - log.at(i, "ref_y"), 2);
    metrics = regulation_metrics(log);
    metrics["rms_planar_error_m"] = std::sqrt(sq / static_cast<double>(log.size()));
    metrics["required_speed_m_s"] = M_PI * c.radius / c.duration;
    res.logs.emplace_back("", std::move(log));
  } else if (id == "depth-yaw-hold") {
    auto plant = detail::make_plant(c, model, c.assembly.removed);
    TimeSeriesLog log = closed_loop(*plant, hold_reference(start_of(*plant), c.duration), c.duration);
    metrics = regulation_metrics(log);
    double quiet_z = 0.0, quiet_psi = 0.0;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const double t = log.at(i, "t");
      bool quiet = t >= c.settle_time;
      for (const Disturbance& d : c.disturbances) quiet = quiet && !(t >= d.t_begin && t < d.t_end + c.settle_time);
      if (!quiet) continue;
      quiet_z = std::max(quiet_z, std::abs(log.at(i, "z") - log.at(i, "ref_z")));
      quiet_psi = std::max(quiet_psi, std::abs(wrap_angle(log.at(i, "yaw") - log.at(i, "ref_yaw"))));
    }
    metrics["settled_max_depth_error_m"] = quiet_z;
    metrics["settled_max_yaw_error_deg"] = quiet_psi * 180.0 / M_PI;
    res.logs.emplace_back("", std::move(log));
  } else if (id == "square") {
    auto plant = detail::make_plant(c, model, c.assembly.removed);
    const double duration = c.leg_time * static_cast<double>(c.leg_accels.size());
    TimeSeriesLog log = closed_loop(*plant, planar_legs_reference(start_of(*plant), c.leg_accels, c.leg_time), duration);
    metrics = regulation_metrics(log);
    json corners = json::array();
    for (std::size_t k = 0; k <= c.leg_accels.size(); ++k) {
      const double tk = c.leg_time * static_cast<double>(k);
      for (std::size_t i = 0; i < log.size(); ++i)
        if (std::abs(log.at(i, "t") - tk) < 0.5 * c.integrator.dt) corners.push_back({log.at(i, "x"), log.at(i, "y")});
    }
    metrics["corners_m"] = corners;
    res.logs.emplace_back("", std::move(log));
  } else if (id == "redundancy") {
    const std::vector<Eigen::Vector2d> leg = {c.leg_accels.front()};
    json runs = json::object();
    double speed[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
      const std::vector<int> removed = k == 0 ? c.assembly.removed : c.impaired_removed;
      auto plant = detail::make_plant(c, model, removed);
      TimeSeriesLog log = closed_loop(*plant, planar_legs_reference(start_of(*plant), leg, c.leg_time), c.leg_time);
      speed[k] = planar_speed(log, 0.5 * c.leg_time, c.leg_time);
      json m = regulation_metrics(log);
      m["speed_m_s"] = speed[k];
      m["speed_bl_per_min"] = speed[k] * 60.0 / c.assembly.body_length;
      runs[k == 0 ? "full" : "impaired"] = m;
      res.logs.emplace_back(k == 0 ? "_full" : "_impaired", std::move(log));
    }
    if (c.plant == PlantKind::simple_model)
      runs["note"] = "the simple plant has no removable modules; both runs are identical";
    metrics = runs;
    metrics["speed_ratio"] = speed[0] > 0.0 ? speed[1] / speed[0] : std::nan("");
    metrics["paper_speed_ratio"] = 0.5;
  } else if (id == "step-response") {
    auto plant = detail::make_plant(c, model, c.assembly.removed);
    const Vec4 s0 = start_of(*plant);
    TimeSeriesLog log = closed_loop(*plant, step_reference(s0, c.step, c.t_step, c.duration), c.duration);
    const double period = 1.0 / c.integrator.control_rate;
    const std::pair<int, const char*> channels[] = {{2, "z"}, {3, "yaw"}};
    for (const auto& [k, col] : channels) {
      if (c.step[k] == 0.0) continue;
      double dev_cont = 0.0, dev_zoh = 0.0;
      for (std::size_t i = 0; i < log.size(); ++i) {
        const double t = log.at(i, "t") - c.t_step;
        if (t < 0.0) continue;
        double y = log.at(i, col) - s0[k];
        if (k == 3) y = wrap_angle(y);
        const double kp = c.controller.gains.kp[k], kd = c.controller.gains.kd[k];
        const double cont = c.step[k] * (1.0 - pd_step_error(kp, kd, t));
        const double zoh = c.step[k] * (1.0 - pd_step_error_sampled(kp, kd, period, t));
        dev_cont = std::max(dev_cont, std::abs(y - cont) / std::abs(c.step[k]));
        dev_zoh = std::max(dev_zoh, std::abs(y - zoh) / std::abs(c.step[k]));
      }
      metrics[std::string(col)] = {{"step", c.step[k]},
                                   {"max_deviation_from_sampled_prediction", dev_zoh},
                                   {"max_deviation_from_continuous_prediction", dev_cont}};
    }
    res.logs.emplace_back("", std::move(log));
  } else {
    throw ConfigError("/scenario/id", "unknown scenario '" + id + "'");
  }

  json actuation = json::object();
  for (const auto& [suffix, log] : res.logs) {
    json a = actuation_metrics(log, model);
    actuation[suffix.empty() ? "run" : suffix.substr(1)] = a;
  }
  actuation["control_ticks"] = stats.control_ticks;
  actuation["allocation_roundtrip_max"] = stats.max_roundtrip_error;

  const Allocator alloc(model, c.controller.least_squares);
  json logs = json::array();
  for (const auto& [suffix, log] : res.logs) logs.push_back(c.name + suffix + ".csv");
  res.summary = {{"schema", kSummarySchema},
                 {"scenario", c.scenario},
                 {"name", c.name},
                 {"plant", to_string(c.plant)},
                 {"config_hash", hash},
                 {"seed", c.seed},
                 {"log_schema", kLogSchema},
                 {"logs", logs},
                 {"metrics", metrics},
                 {"actuation", actuation},
                 {"allocation",
                  {{"condition_number", alloc.condition_number()},
                   {"spin", model.spin},
                   {"c_thrust", model.c_thrust},
                   {"c_reaction", model.c_reaction}}},
                 {"parameters", detail::parameters_json(c)}};
  return res;
}

}  // namespace zodiaq
