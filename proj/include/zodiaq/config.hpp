#pragma once

// Scenario configuration: JSON files with include-able parameter blocks,
// parsed into typed settings and checked for physical sanity. Every problem is
// reported with a JSON-pointer location into the merged document.

#include "zodiaq/control.hpp"
#include "zodiaq/integrator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace zodiaq {

using json = nlohmann::json;

struct Diagnostic {
  std::string location;  // JSON pointer, "" for the document root
  std::string message;
};

inline std::string to_string(const Diagnostic& d) {
  return (d.location.empty() ? std::string("/") : d.location) + ": " + d.message;
}

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Diagnostic> d) : std::runtime_error(summarize(d)), diagnostics(std::move(d)) {}
  ConfigError(std::string location, std::string message) : ConfigError(std::vector<Diagnostic>{{std::move(location), std::move(message)}}) {}
  std::vector<Diagnostic> diagnostics;

 private:
  static std::string summarize(const std::vector<Diagnostic>& d) {
    std::string s = "invalid configuration";
    for (const Diagnostic& x : d) s += "\n  " + to_string(x);
    return s;
  }
};

enum class PlantKind { full_twin, simple_model };

inline const char* to_string(PlantKind k) { return k == PlantKind::full_twin ? "full_twin" : "simple_model"; }

inline const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids = {"openloop-fig2c", "semicircle",  "depth-yaw-hold",   "square",
                                               "redundancy",     "crawl-pattern", "step-response", "passive-stability"};
  return ids;
}

struct MotorRun {
  int motor = 1;
  double rpm = 0.0;
  bool ccw = true;
};

/// External wrench on the shell, world axes, applied at the shell centre.
struct Disturbance {
  double t_begin = 0.0;
  double t_end = 0.0;
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

struct ControllerSettings {
  PdGains gains;
  double c_thrust = 6.0e-4;
  double c_reaction = 1.0e-4;
  std::optional<std::array<int, kNumFaces>> spin;  // unset: searched for yaw authority
  std::array<std::pair<int, int>, kNumPairs> pairs{{{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}}};
  double cap_fraction = 0.8;
  bool least_squares = false;
  std::optional<Mat6> inertia;  // about the centre of mass; unset: from the twin
  double depth_noise = 0.0;     // sensor noise std, m
  double yaw_noise = 0.0;       // sensor noise std, rad
};

struct ScenarioConfig {
  std::string scenario;
  std::string name;
  PlantKind plant = PlantKind::full_twin;
  double duration = 60.0;
  std::uint64_t seed = 0;

  ZodiaqParams assembly;
  HydroParams hydro;
  double damping_beta = 0.05;
  IntegratorConfig integrator{IntegratorKind::implicit_euler, 2e-3, 60.0, 50.0, 10.0, 1e4};
  double ramp_time = 0.1;
  /// Side from which motor rotation is called clockwise or counter-clockwise:
  /// "outside" (facing the shaft end) or "inside" (looking out along the shaft).
  std::string rotation_viewpoint = "inside";
  ControllerSettings controller;

  Vec3 initial_position = Vec3::Zero();  // shell centre, world
  Vec3 initial_rpy = Vec3::Zero();       // rad
  /// Static settling of the twin before t = 0: "attitude" solves the flagellum
  /// shapes and the shell's roll and pitch, "flagella" only the shapes, "none"
  /// starts from straight flagella.
  std::string settle = "attitude";

  // Scenario-specific settings.
  std::vector<MotorRun> motors;
  double radius = 2.0;
  std::vector<Disturbance> disturbances;
  std::vector<Eigen::Vector2d> leg_accels;
  double leg_time = 40.0;
  std::vector<int> impaired_removed{5};
  Vec4 step = Vec4::Zero();
  double t_step = 1.0;
  double settle_time = 10.0;

  json resolved;  // merged document the settings were read from

  /// +1/-1 rotation about the outward face normal for a ccw/cw command.
  int spin_sign(bool ccw) const { return (rotation_viewpoint == "outside") == ccw ? 1 : -1; }
};

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

inline json resolve_includes(const std::filesystem::path& path, std::vector<std::filesystem::path>& stack) {
  const auto canon = std::filesystem::weakly_canonical(path);
  for (const auto& p : stack)
    if (p == canon) throw ConfigError("/include", "include cycle through " + canon.string());
  stack.push_back(canon);
  json doc = read_json_file(canon);
  if (!doc.is_object()) throw ConfigError("", canon.string() + ": top level must be an object");
  json merged = json::object();
  if (doc.contains("include")) {
    json inc = doc["include"];
    if (inc.is_string()) inc = json::array({inc});
    if (!inc.is_array()) throw ConfigError("/include", "must be a path or a list of paths");
    for (const json& p : inc) {
      if (!p.is_string()) throw ConfigError("/include", "include entries must be strings");
      merged.merge_patch(resolve_includes(canon.parent_path() / p.get<std::string>(), stack));
    }
    doc.erase("include");
  }
  merged.merge_patch(doc);
  stack.pop_back();
  return merged;
}

/// Typed access to one JSON object that records the keys it consumed, so
/// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string ptr, std::vector<Diagnostic>& diags) : j_(j), ptr_(std::move(ptr)), diags_(diags) {
    if (!j_.is_object()) error("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  std::string at(const std::string& key) const { return ptr_ + "/" + key; }
  const json* raw(const std::string& key) {
    if (!has(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  void error(const std::string& key, const std::string& msg) const { diags_.push_back({key.empty() ? ptr_ : at(key), msg}); }

  void number(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (v->is_number()) out = v->get<double>();
      else error(key, "expected a number");
    }
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = raw(key)) {
      if (v->is_number_integer()) out = v->get<int>();
      else error(key, "expected an integer");
    }
  }
  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const json* v = raw(key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else error(key, "expected a non-negative integer");
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else error(key, "expected true or false");
    }
  }
  void string(const std::string& key, std::string& out, const std::vector<std::string>& allowed = {}) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) return error(key, "expected a string");
      const std::string s = v->get<std::string>();
      if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        return error(key, "'" + s + "' is not one of: " + list);
      }
      out = s;
    }
  }
  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const json* v = raw(key)) {
      if (!read_vector<N>(*v, out)) error(key, "expected an array of " + std::to_string(N) + " numbers");
    }
  }
  /// N x N matrix given as nested rows or as its diagonal.
  template <int N>
  void matrix(const std::string& key, Eigen::Matrix<double, N, N>& out) {
    if (const json* v = raw(key)) {
      Eigen::Matrix<double, N, 1> d;
      if (read_vector<N>(*v, d)) {
        out = d.asDiagonal();
        return;
      }
      if (v->is_array() && v->size() == N) {
        Eigen::Matrix<double, N, N> m;
        bool ok = true;
        for (int r = 0; r < N && ok; ++r) {
          Eigen::Matrix<double, N, 1> row;
          ok = read_vector<N>((*v)[static_cast<std::size_t>(r)], row);
          if (ok) m.row(r) = row.transpose();
        }
        if (ok) {
          out = m;
          return;
        }
      }
      error(key, "expected a " + std::to_string(N) + "x" + std::to_string(N) + " matrix (rows) or its diagonal");
    }
  }
  void integers(const std::string& key, std::vector<int>& out) {
    if (const json* v = raw(key)) {
      if (!v->is_array()) return error(key, "expected an array of integers");
      std::vector<int> r;
      for (const json& x : *v) {
        if (!x.is_number_integer()) return error(key, "expected an array of integers");
        r.push_back(x.get<int>());
      }
      out = r;
    }
  }

  /// Reports keys present in the object but never read.
  void finish() const {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) diags_.push_back({at(it.key()), "unknown key"});
  }

 private:
  template <int N>
  static bool read_vector(const json& v, Eigen::Matrix<double, N, 1>& out) {
    if (!v.is_array() || v.size() != N) return false;
    for (int i = 0; i < N; ++i) {
      const json& x = v[static_cast<std::size_t>(i)];
      if (!x.is_number()) return false;
      out[i] = x.get<double>();
    }
    return true;
  }

  const json& j_;
  std::string ptr_;
  std::vector<Diagnostic>& diags_;
  std::set<std::string> used_;
};

inline void read_flagellum(Reader r, SoftLinkSpec& s) {
  r.number("length", s.length);
  r.number("radius", s.radius);
  r.number("youngs_modulus", s.youngs_modulus);
  bool shear_given = r.has("shear_modulus");
  r.number("shear_modulus", s.shear_modulus);
  if (!shear_given) s.shear_modulus = s.youngs_modulus / 3.0;
  r.number("density", s.density);
  std::vector<int> order(s.basis_order.begin(), s.basis_order.end());
  r.integers("basis_order", order);
  if (order.size() == 3) std::copy(order.begin(), order.end(), s.basis_order.begin());
  else r.error("basis_order", "expected three polynomial orders (torsion, bend-y, bend-z)");
  r.integer("quadrature_points", s.quadrature_points);
  r.integer("magnus_substeps", s.magnus_substeps);
  r.finish();
}

inline void read_assembly(Reader r, ZodiaqParams& p, std::vector<Diagnostic>& diags, const std::string& ptr) {
  r.number("edge_length", p.edge_length);
  r.number("total_mass", p.total_mass);
  r.number("shell_mass", p.shell_mass);
  r.number("d_cg", p.d_cg);
  r.number("body_length", p.body_length);
  r.number("omega_max_rpm", p.omega_max_rpm);
  r.number("water_density", p.water_density);
  r.number("net_buoyancy_mass", p.net_buoyancy_mass);
  r.matrix<3>("shell_inertia", p.shell_inertia);
  r.number("shaft_length", p.shaft_length);
  r.number("shaft_radius", p.shaft_radius);
  r.number("shaft_mass", p.shaft_mass);
  r.number("hook_length", p.hook_length);
  r.number("hook_radius", p.hook_radius);
  r.number("hook_mass", p.hook_mass);
  r.number("hook_bend", p.hook_bend);
  if (const json* f = r.raw("flagellum")) read_flagellum(Reader(*f, ptr + "/flagellum", diags), p.flagellum);
  r.integers("removed", p.removed);
  std::string mode = p.removal_mode == RemovalMode::detach_flagellum ? "detach_flagellum" : "remove_module";
  r.string("removal_mode", mode, {"detach_flagellum", "remove_module"});
  p.removal_mode = mode == "remove_module" ? RemovalMode::remove_module : RemovalMode::detach_flagellum;
  r.finish();
}

inline void read_hydro(Reader r, HydroParams& h) {
  r.number("water_density", h.water_density);
  r.number("gravity", h.gravity);
  r.number("rod_cd_normal", h.rod_cd_normal);
  r.number("rod_cd_tangent", h.rod_cd_tangent);
  r.number("rod_cl", h.rod_cl);
  r.number("rod_ca", h.rod_ca);
  r.matrix<6>("shell_drag", h.shell_drag);
  r.matrix<6>("shell_linear_drag", h.shell_linear_drag);
  r.matrix<6>("shell_added_mass", h.shell_added_mass);
  if (const json* s = r.raw("surface_z")) {
    if (s->is_null()) h.surface_z.reset();
    else if (s->is_number()) h.surface_z = s->get<double>();
    else r.error("surface_z", "expected a number or null");
  }
  r.finish();
}

inline void read_controller(Reader r, ControllerSettings& c) {
  r.vector<4>("kp", c.gains.kp);
  r.vector<4>("kd", c.gains.kd);
  r.number("c_thrust", c.c_thrust);
  r.number("c_reaction", c.c_reaction);
  if (const json* s = r.raw("spin")) {
    if (s->is_string() && s->get<std::string>() == "auto") {
      c.spin.reset();
    } else if (s->is_array() && s->size() == kNumFaces) {
      std::array<int, kNumFaces> v{};
      bool ok = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        ok = ok && (*s)[i].is_number_integer();
        if (ok) v[i] = (*s)[i].get<int>();
      }
      if (ok) c.spin = v;
      else r.error("spin", "expected 12 integers or \"auto\"");
    } else {
      r.error("spin", "expected 12 integers or \"auto\"");
    }
  }
  if (const json* s = r.raw("pairs")) {
    bool ok = s->is_array() && s->size() == kNumPairs;
    for (std::size_t j = 0; ok && j < kNumPairs; ++j) {
      const json& p = (*s)[j];
      ok = p.is_array() && p.size() == 2 && p[0].is_number_integer() && p[1].is_number_integer();
      if (ok) c.pairs[j] = {p[0].get<int>(), p[1].get<int>()};
    }
    if (!ok) r.error("pairs", "expected six [motor_a, motor_b] pairs");
  }
  r.number("cap_fraction", c.cap_fraction);
  r.boolean("least_squares", c.least_squares);
  if (r.has("inertia")) {
    Mat6 m = Mat6::Zero();
    r.matrix<6>("inertia", m);
    c.inertia = m;
  }
  r.number("depth_noise", c.depth_noise);
  r.number("yaw_noise", c.yaw_noise);
  r.finish();
}

inline void read_integrator(Reader r, IntegratorConfig& cfg, double& ramp) {
  std::string kind = to_string(cfg.kind);
  r.string("kind", kind, {"rk4", "implicit_euler"});
  cfg.kind = kind == "rk4" ? IntegratorKind::rk4 : IntegratorKind::implicit_euler;
  r.number("dt", cfg.dt);
  r.number("log_rate", cfg.log_rate);
  r.number("control_rate", cfg.control_rate);
  r.number("max_speed", cfg.max_speed);
  r.number("motor_ramp", ramp);
  r.finish();
}

inline void read_scenario(Reader r, ScenarioConfig& c, std::vector<Diagnostic>& diags, const std::string& ptr) {
  r.string("id", c.scenario, scenario_ids());
  if (!r.has("id")) r.error("", "missing scenario id");
  r.number("duration", c.duration);
  if (const json* m = r.raw("motors")) {
    if (!m->is_array()) {
      r.error("motors", "expected an array");
    } else {
      c.motors.clear();
      for (std::size_t i = 0; i < m->size(); ++i) {
        Reader mr((*m)[i], ptr + "/motors/" + std::to_string(i), diags);
        MotorRun run;
        mr.integer("motor", run.motor);
        mr.number("rpm", run.rpm);
        std::string dir = "ccw";
        mr.string("direction", dir, {"ccw", "cw"});
        run.ccw = dir == "ccw";
        mr.finish();
        c.motors.push_back(run);
      }
    }
  }
  r.number("radius", c.radius);
  if (const json* d = r.raw("disturbances")) {
    if (!d->is_array()) {
      r.error("disturbances", "expected an array");
    } else {
      c.disturbances.clear();
      for (std::size_t i = 0; i < d->size(); ++i) {
        Reader dr((*d)[i], ptr + "/disturbances/" + std::to_string(i), diags);
        Disturbance x;
        dr.number("t_begin", x.t_begin);
        dr.number("t_end", x.t_end);
        dr.vector<3>("force", x.force);
        dr.vector<3>("moment", x.moment);
        dr.finish();
        c.disturbances.push_back(x);
      }
    }
  }
  if (const json* a = r.raw("leg_accelerations")) {
    bool ok = a->is_array();
    std::vector<Eigen::Vector2d> legs;
    for (std::size_t i = 0; ok && i < a->size(); ++i) {
      const json& l = (*a)[i];
      ok = l.is_array() && l.size() == 2 && l[0].is_number() && l[1].is_number();
      if (ok) legs.emplace_back(l[0].get<double>(), l[1].get<double>());
    }
    if (ok) c.leg_accels = legs;
    else r.error("leg_accelerations", "expected an array of [ax, ay] pairs");
  }
  r.number("leg_time", c.leg_time);
  r.integers("impaired_removed", c.impaired_removed);
  r.vector<4>("step", c.step);
  r.number("t_step", c.t_step);
  r.number("settle_time", c.settle_time);
  r.finish();
}

}  // namespace detail

/// Parses a merged document; problems are appended to `diags`.
inline ScenarioConfig parse_config(const json& doc, std::vector<Diagnostic>& diags) {
  ScenarioConfig c;
  c.resolved = doc;
  detail::Reader r(doc, "", diags);
  r.string("name", c.name);
  std::string plant = to_string(c.plant);
  r.string("plant", plant, {"full_twin", "simple_model"});
  c.plant = plant == "simple_model" ? PlantKind::simple_model : PlantKind::full_twin;
  r.unsigned64("seed", c.seed);
  r.number("damping_beta", c.damping_beta);
  r.string("rotation_viewpoint", c.rotation_viewpoint, {"outside", "inside"});
  if (const json* a = r.raw("assembly")) detail::read_assembly(detail::Reader(*a, "/assembly", diags), c.assembly, diags, "/assembly");
  if (const json* h = r.raw("hydro")) detail::read_hydro(detail::Reader(*h, "/hydro", diags), c.hydro);
  if (const json* i = r.raw("integrator")) detail::read_integrator(detail::Reader(*i, "/integrator", diags), c.integrator, c.ramp_time);
  if (const json* k = r.raw("controller")) detail::read_controller(detail::Reader(*k, "/controller", diags), c.controller);
  if (const json* s = r.raw("initial")) {
    detail::Reader ir(*s, "/initial", diags);
    ir.vector<3>("position", c.initial_position);
    ir.string("settle", c.settle, {"attitude", "flagella", "none"});
    Vec3 deg = c.initial_rpy * 180.0 / M_PI;
    ir.vector<3>("rpy_deg", deg);
    c.initial_rpy = deg * M_PI / 180.0;
    ir.finish();
  }
  if (const json* s = r.raw("scenario")) detail::read_scenario(detail::Reader(*s, "/scenario", diags), c, diags, "/scenario");
  else r.error("", "missing scenario block");
  r.finish();
  if (c.name.empty()) c.name = c.scenario;
  c.integrator.t_end = c.duration;
  return c;
}

/// Reads a config file, resolving includes relative to each including file.
inline json load_config_document(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> stack;
  return detail::resolve_includes(path, stack);
}

// ---------------------------------------------------------------------------
// Physics sanity checks

namespace detail {

inline bool spd(const Eigen::MatrixXd& m) {
  if ((m - m.transpose()).norm() > 1e-9 * std::max(1.0, m.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

inline bool psd_diagonal(const Mat6& m) { return m.isDiagonal() && (m.diagonal().array() >= 0.0).all(); }

}  // namespace detail

inline std::vector<Diagnostic> check_physics(const ScenarioConfig& c) {
  std::vector<Diagnostic> d;
  auto positive = [&](double v, const std::string& loc) {
    if (!(v > 0.0)) d.push_back({loc, "must be positive (got " + std::to_string(v) + ")"});
  };
  auto nonneg = [&](double v, const std::string& loc) {
    if (!(v >= 0.0)) d.push_back({loc, "must be non-negative (got " + std::to_string(v) + ")"});
  };
  const ZodiaqParams& a = c.assembly;
  positive(a.edge_length, "/assembly/edge_length");
  positive(a.total_mass, "/assembly/total_mass");
  positive(a.omega_max_rpm, "/assembly/omega_max_rpm");
  positive(a.water_density, "/assembly/water_density");
  nonneg(a.d_cg, "/assembly/d_cg");
  const std::pair<const char*, double> module_sizes[] = {{"shaft_length", a.shaft_length}, {"shaft_radius", a.shaft_radius},
                                                         {"shaft_mass", a.shaft_mass},     {"hook_length", a.hook_length},
                                                         {"hook_radius", a.hook_radius},   {"hook_mass", a.hook_mass}};
  for (const auto& [field, v] : module_sizes) positive(v, std::string("/assembly/") + field);
  positive(a.flagellum.length, "/assembly/flagellum/length");
  positive(a.flagellum.radius, "/assembly/flagellum/radius");
  positive(a.flagellum.youngs_modulus, "/assembly/flagellum/youngs_modulus");
  positive(a.flagellum.shear_modulus, "/assembly/flagellum/shear_modulus");
  positive(a.flagellum.density, "/assembly/flagellum/density");
  for (int k = 0; k < 3; ++k)
    if (a.flagellum.basis_order[static_cast<std::size_t>(k)] < 1)
      d.push_back({"/assembly/flagellum/basis_order/" + std::to_string(k), "order must be at least 1"});
  if (a.flagellum.quadrature_points < 2) d.push_back({"/assembly/flagellum/quadrature_points", "need at least 2 points"});
  if (a.flagellum.magnus_substeps < 1) d.push_back({"/assembly/flagellum/magnus_substeps", "must be at least 1"});
  if (!detail::spd(a.shell_inertia)) d.push_back({"/assembly/shell_inertia", "not symmetric positive definite"});
  auto motor_ok = [](int m) { return m >= 1 && m <= kNumFaces; };
  for (std::size_t i = 0; i < a.removed.size(); ++i)
    if (!motor_ok(a.removed[i])) d.push_back({"/assembly/removed/" + std::to_string(i), "no motor M" + std::to_string(a.removed[i])});

  const HydroParams& h = c.hydro;
  nonneg(h.water_density, "/hydro/water_density");
  nonneg(h.gravity, "/hydro/gravity");
  nonneg(h.rod_cd_normal, "/hydro/rod_cd_normal");
  nonneg(h.rod_cd_tangent, "/hydro/rod_cd_tangent");
  nonneg(h.rod_ca, "/hydro/rod_ca");
  if (!detail::psd_diagonal(h.shell_drag)) d.push_back({"/hydro/shell_drag", "must be diagonal with non-negative entries"});
  if (!detail::psd_diagonal(h.shell_linear_drag)) d.push_back({"/hydro/shell_linear_drag", "must be diagonal with non-negative entries"});
  {
    Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (h.shell_added_mass + h.shell_added_mass.transpose()));
    if ((h.shell_added_mass - h.shell_added_mass.transpose()).norm() > 1e-12 || es.eigenvalues().minCoeff() < 0.0)
      d.push_back({"/hydro/shell_added_mass", "not symmetric positive semi-definite"});
  }
  nonneg(c.damping_beta, "/damping_beta");

  const IntegratorConfig& ic = c.integrator;
  positive(ic.dt, "/integrator/dt");
  positive(ic.log_rate, "/integrator/log_rate");
  positive(ic.control_rate, "/integrator/control_rate");
  positive(ic.max_speed, "/integrator/max_speed");
  nonneg(c.ramp_time, "/integrator/motor_ramp");
  if (ic.dt > 0.0 && ic.control_rate > 0.0 && ic.dt * ic.control_rate > 1.0)
    d.push_back({"/integrator/dt", "time step longer than the control period"});

  const ControllerSettings& k = c.controller;
  for (int i = 0; i < 4; ++i) {
    positive(k.gains.kp[i], "/controller/kp/" + std::to_string(i));
    positive(k.gains.kd[i], "/controller/kd/" + std::to_string(i));
  }
  positive(k.c_thrust, "/controller/c_thrust");
  nonneg(k.c_reaction, "/controller/c_reaction");
  if (!(k.cap_fraction > 0.0) || k.cap_fraction > 1.0)
    d.push_back({"/controller/cap_fraction", "speed cap must lie in (0, omega_max]; cap_fraction must be in (0, 1]"});
  if (k.inertia && !detail::spd(*k.inertia)) d.push_back({"/controller/inertia", "not symmetric positive definite"});
  nonneg(k.depth_noise, "/controller/depth_noise");
  nonneg(k.yaw_noise, "/controller/yaw_noise");
  if (k.spin)
    for (std::size_t i = 0; i < kNumFaces; ++i)
      if ((*k.spin)[i] != 1 && (*k.spin)[i] != -1) d.push_back({"/controller/spin/" + std::to_string(i), "must be +1 or -1"});
  {
    std::array<int, kNumFaces> seen{};
    const Dodecahedron shell = make_dodecahedron(a.edge_length > 0.0 ? a.edge_length : 1.0);
    for (std::size_t j = 0; j < kNumPairs; ++j) {
      const auto [ma, mb] = k.pairs[j];
      const std::string loc = "/controller/pairs/" + std::to_string(j);
      if (!motor_ok(ma) || !motor_ok(mb) || ma == mb) {
        d.push_back({loc, "pair must name two different motors between 1 and 12"});
        continue;
      }
      ++seen[static_cast<std::size_t>(ma - 1)];
      ++seen[static_cast<std::size_t>(mb - 1)];
      const double dev = (shell.face(ma).normal + shell.face(mb).normal).norm();
      if (dev > 1e-9)
        d.push_back({loc, "faces of M" + std::to_string(ma) + " and M" + std::to_string(mb) + " are not antiparallel (|n_a + n_b| = " +
                              std::to_string(dev) + ")"});
      if (k.spin && (*k.spin)[static_cast<std::size_t>(ma - 1)] != (*k.spin)[static_cast<std::size_t>(mb - 1)])
        d.push_back({loc, "both motors of a pair must share a spin direction"});
    }
    for (std::size_t m = 0; m < kNumFaces; ++m)
      if (seen[m] != 1) d.push_back({"/controller/pairs", "M" + std::to_string(m + 1) + " must appear in exactly one pair"});
  }

  positive(c.duration, "/scenario/duration");
  const double cap_rpm = k.cap_fraction * a.omega_max_rpm;
  for (std::size_t i = 0; i < c.motors.size(); ++i) {
    const std::string loc = "/scenario/motors/" + std::to_string(i);
    if (!motor_ok(c.motors[i].motor)) d.push_back({loc + "/motor", "no motor M" + std::to_string(c.motors[i].motor)});
    nonneg(c.motors[i].rpm, loc + "/rpm");
    if (c.motors[i].rpm > cap_rpm) d.push_back({loc + "/rpm", "exceeds the speed cap of " + std::to_string(cap_rpm) + " RPM"});
  }
  for (std::size_t i = 0; i < c.disturbances.size(); ++i)
    if (!(c.disturbances[i].t_end > c.disturbances[i].t_begin))
      d.push_back({"/scenario/disturbances/" + std::to_string(i), "window must have t_end > t_begin"});
  positive(c.radius, "/scenario/radius");
  positive(c.leg_time, "/scenario/leg_time");
  nonneg(c.settle_time, "/scenario/settle_time");
  for (std::size_t i = 0; i < c.impaired_removed.size(); ++i)
    if (!motor_ok(c.impaired_removed[i]))
      d.push_back({"/scenario/impaired_removed/" + std::to_string(i), "no motor M" + std::to_string(c.impaired_removed[i])});
  if ((c.scenario == "square" || c.scenario == "redundancy") && c.leg_accels.empty())
    d.push_back({"/scenario/leg_accelerations", "at least one leg is required"});
  if ((c.scenario == "openloop-fig2c" || c.scenario == "crawl-pattern") && c.motors.empty())
    d.push_back({"/scenario/motors", "open-loop scenarios need at least one motor"});
  if (c.scenario == "step-response" && c.plant != PlantKind::simple_model)
    d.push_back({"/plant", "step-response runs on the simple model"});
  return d;
}

/// Loads, parses and checks a config file; throws ConfigError listing every
/// problem found.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
  const json doc = load_config_document(path);
  std::vector<Diagnostic> diags;
  ScenarioConfig c = parse_config(doc, diags);
  if (diags.empty()) diags = check_physics(c);
  if (!diags.empty()) throw ConfigError(diags);
  return c;
}

/// All problems in a config file (empty when valid).
inline std::vector<Diagnostic> validate_config(const std::filesystem::path& path) {
  try {
    const json doc = load_config_document(path);
    std::vector<Diagnostic> diags;
    const ScenarioConfig c = parse_config(doc, diags);
    const auto phys = check_physics(c);
    diags.insert(diags.end(), phys.begin(), phys.end());
    return diags;
  } catch (const ConfigError& e) {
    return e.diagnostics;
  }
}

/// 64-bit FNV-1a of the merged document's canonical serialization.
inline std::string config_hash(const json& doc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Provenance of parameter values

enum class Provenance { paper, calibrated, assumed };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::paper: return "paper";
    case Provenance::calibrated: return "calibrated";
    case Provenance::assumed: return "assumed";
  }
  return "?";
}

struct ParameterRecord {
  std::string path;
  json value;
  Provenance provenance;
};

inline json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

/// Values of the parameters that are not fixed by the paper's main text,
/// plus the stated ones they depend on.
inline std::vector<ParameterRecord> parameter_records(const ScenarioConfig& c) {
  using P = Provenance;
  const ZodiaqParams& a = c.assembly;
  const HydroParams& h = c.hydro;
  const ControllerSettings& k = c.controller;
  std::vector<ParameterRecord> r = {
      {"/assembly/edge_length", a.edge_length, P::paper},
      {"/assembly/total_mass", a.total_mass, P::paper},
      {"/assembly/d_cg", a.d_cg, P::paper},
      {"/assembly/omega_max_rpm", a.omega_max_rpm, P::paper},
      {"/assembly/shell_inertia", vec_json(a.shell_inertia.diagonal()), P::assumed},
      {"/assembly/shaft_length", a.shaft_length, P::assumed},
      {"/assembly/shaft_radius", a.shaft_radius, P::assumed},
      {"/assembly/shaft_mass", a.shaft_mass, P::assumed},
      {"/assembly/hook_length", a.hook_length, P::assumed},
      {"/assembly/hook_radius", a.hook_radius, P::assumed},
      {"/assembly/hook_mass", a.hook_mass, P::assumed},
      {"/assembly/hook_bend", a.hook_bend, P::calibrated},
      {"/assembly/flagellum/length", a.flagellum.length, P::calibrated},
      {"/assembly/flagellum/radius", a.flagellum.radius, P::calibrated},
      {"/assembly/flagellum/youngs_modulus", a.flagellum.youngs_modulus, P::calibrated},
      {"/assembly/flagellum/shear_modulus", a.flagellum.shear_modulus, P::assumed},
      {"/assembly/flagellum/density", a.flagellum.density, P::calibrated},
      {"/damping_beta", c.damping_beta, P::assumed},
      {"/hydro/rod_cd_normal", h.rod_cd_normal, P::calibrated},
      {"/hydro/rod_cd_tangent", h.rod_cd_tangent, P::calibrated},
      {"/hydro/rod_cl", h.rod_cl, P::calibrated},
      {"/hydro/rod_ca", h.rod_ca, P::assumed},
      {"/hydro/shell_drag", vec_json(h.shell_drag.diagonal()), P::calibrated},
      {"/hydro/shell_linear_drag", vec_json(h.shell_linear_drag.diagonal()), P::calibrated},
      {"/hydro/shell_added_mass", vec_json(h.shell_added_mass.diagonal()), P::assumed},
      {"/rotation_viewpoint", c.rotation_viewpoint, P::calibrated},
      {"/controller/kp", vec_json(k.gains.kp), P::assumed},
      {"/controller/kd", vec_json(k.gains.kd), P::assumed},
      {"/controller/c_thrust", k.c_thrust, P::calibrated},
      {"/controller/c_reaction", k.c_reaction, P::calibrated},
      {"/controller/spin", k.spin ? json(*k.spin) : json("auto"), P::assumed},
      {"/controller/cap_fraction", k.cap_fraction, P::paper},
      {"/integrator/dt", c.integrator.dt, P::assumed},
      {"/integrator/control_rate", c.integrator.control_rate, P::assumed},
      {"/integrator/motor_ramp", c.ramp_time, P::assumed},
  };
  if (!c.disturbances.empty()) {
    json d = json::array();
    for (const Disturbance& x : c.disturbances)
      d.push_back({{"t_begin", x.t_begin}, {"t_end", x.t_end}, {"force", vec_json(x.force)}, {"moment", vec_json(x.moment)}});
    r.push_back({"/scenario/disturbances", d, P::assumed});
  }
  if (!c.leg_accels.empty()) {
    json l = json::array();
    for (const auto& x : c.leg_accels) l.push_back({x.x(), x.y()});
    r.push_back({"/scenario/leg_accelerations", l, P::assumed});
  }
  return r;
}

}  // namespace zodiaq
