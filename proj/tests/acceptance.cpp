// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria (capped at 125).

#include "zodiaq/calibration.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

using namespace zodiaq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string csv(const TimeSeriesLog& log) {
  std::ostringstream os;
  log.write_csv(os);
  return os.str();
}

struct Run {
  ScenarioResult result;
  double wall = 0.0;
  std::string error;
};

Run run(const std::string& name) {
  Run r;
  const auto t0 = Clock::now();
  try {
    r.result = run_scenario(load_config(std::string(ZODIAQ_CONFIG_DIR) + "/" + name + ".json"));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.wall = seconds_since(t0);
  return r;
}

double num(const json& j, const char* key) { return j.at(key).get<double>(); }

// --- structural and numerical checks on the full build ----------------------

void criterion_1() {
  const auto t0 = Clock::now();
  const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  const double t = seconds_since(t0);
  report(1, b.assembly.num_links() == 37 && b.assembly.num_dofs() == 90 && t < 1.0,
         fmt("links %d (37), DoFs %d (90), %.3f s (< 1 s)", b.assembly.num_links(), b.assembly.num_dofs(), t));
}

Assembly clamped_rod(SoftLinkSpec rod = {}) {
  Assembly a;
  RigidLinkSpec anchor;
  anchor.joint = JointKind::fixed;
  a.add_rigid("anchor", -1, anchor);
  a.add_soft("rod", 0, rod);
  a.finalize();
  return a;
}

void criterion_2() {
  const auto t0 = Clock::now();
  const SoftLinkSpec rod;
  const Assembly a = clamped_rod(rod);
  const double L = rod.length, ei = rod.youngs_modulus * rod.second_moment();
  const double force = 0.01 * L * 3.0 * ei / (L * L * L);
  const TwinModel m(a, HydroParams::vacuum(), 0.05, {PointLoad{1, make_twist(Vec3::Zero(), Vec3(0, 0, -force))}});
  GeneralizedState st = GeneralizedState::zero(a);
  static_equilibrium(m, st, {0, 1, 2, 3, 4, 5});
  const double tip = -forward_kinematics(a, st, 1, L).pose.p.z();
  const double err = std::abs(tip / (force * L * L * L / (3.0 * ei)) - 1.0);
  const double t = seconds_since(t0);
  report(2, err < 0.01 && t < 10.0, fmt("tip deflection error %.3e (< 1e-2), %.2f s (< 10 s)", err, t));
}

void criterion_3() {
  const auto t0 = Clock::now();
  const Assembly rod = clamped_rod();
  const TwinModel mr(rod, HydroParams::vacuum(), 0.0);
  GeneralizedState st = GeneralizedState::zero(rod);
  st.q << 0.5, -0.3, 2.0, 1.0, -3.0, 0.5;
  st.qdot << 1.0, 0.0, -2.0, 0.0, 1.0, 0.5;
  MotorDrive drive;
  IntegratorConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 1.0;
  const double e0 = mr.energy(st).total();
  double de = 0.0;
  simulate(mr, drive, st, cfg, {}, [&](double, const GeneralizedState& s) { de = std::max(de, std::abs(mr.energy(s).total() - e0)); });

  const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  const TwinModel mv(b.assembly, HydroParams::vacuum(), 0.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  GeneralizedState sv = GeneralizedState::zero(b.assembly);
  sv.qdot.head<6>() << 0.3, -0.2, 0.4, 0.5, -0.2, 0.1;
  for (const auto& mod : b.modules)
    for (int k = 0; k < 6; ++k) sv.qdot[b.assembly.link(mod.flagellum).dof_offset + k] = u(rng);
  IntegratorConfig cv;
  cv.dt = 2e-4;
  cv.t_end = 5.0;
  cv.log_rate = 5.0;
  const Vec3 p0 = mv.linear_momentum(sv);
  double dp = 0.0;
  simulate(mv, drive, sv, cv, {}, [&](double, const GeneralizedState& s) { dp = std::max(dp, (mv.linear_momentum(s) - p0).norm()); });
  const double t = seconds_since(t0);
  report(3, de / e0 < 1e-3 && dp / p0.norm() < 1e-6 && t < 120.0,
         fmt("rod |dE|/E %.2e (< 1e-3), assembly |dp|/|p| %.2e (< 1e-6), %.1f s (< 120 s)", de / e0, dp / p0.norm(), t));
}

Vec6 fd_column(const Assembly& a, const GeneralizedState& st, int link, double x, int k, double h) {
  GeneralizedState sp = st, sm = st;
  sp.q[k] += h;
  sm.q[k] -= h;
  const Pose g = forward_kinematics(a, st, link, x).pose;
  return (log_pose(g.inverse() * forward_kinematics(a, sp, link, x).pose) - log_pose(g.inverse() * forward_kinematics(a, sm, link, x).pose)) /
         (2.0 * h);
}

void criterion_4() {
  const auto t0 = Clock::now();
  const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  const Assembly& a = b.assembly;
  std::mt19937 rng(15);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    GeneralizedState st = GeneralizedState::zero(a);
    Vec6 base;
    for (int i = 0; i < 6; ++i) base[i] = u(rng);
    st.base = exp_twist(base);
    for (int i = 1; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      for (int k = 0; k < l.dof_count; ++k) st.q[l.dof_offset + k] = (l.is_soft() ? 6.0 : M_PI) * u(rng);
    }
    const auto& mod = b.modules[static_cast<std::size_t>(trial % kNumFaces)];
    const double x = std::uniform_real_distribution<double>(0.0, b.params.flagellum.length)(rng);
    const JacobianResult j = jacobian(a, st, mod.flagellum, x);
    for (int k : a.link(mod.flagellum).path_dofs) {
      const Vec6 fd = fd_column(a, st, mod.flagellum, x, k, 1e-6);
      worst = std::max(worst, (fd - j.J.col(k)).norm() / std::max(1.0, j.J.col(k).norm()));
    }
  }
  const double t = seconds_since(t0);
  report(4, worst < 1e-5 && t < 60.0, fmt("max relative FD mismatch %.2e (< 1e-5), %.1f s (< 60 s)", worst, t));
}

// --- scenario-based checks ----------------------------------------------------

bool within_factor(double value, double target, double factor) { return value >= target / factor && value <= target * factor; }

void criterion_5(const Run& r) {
  if (!r.error.empty()) return report(5, false, "run failed: " + r.error);
  const json& m = r.result.summary["metrics"];
  const double dx = num(m, "dx_m"), dy = num(m, "dy_m"), dz = num(m, "dz_m"), dyaw = num(m, "dyaw_deg");
  const bool direction = dx < 0.0 && std::abs(dx) > std::abs(dy) && std::abs(dx) > std::abs(dz);
  const bool signs = dy > 0.0 && dz > 0.0 && dyaw > 0.0;
  const bool sizes = within_factor(dy, 0.74, 2.0) && within_factor(dz, 0.03, 2.0) && within_factor(dyaw, 32.8, 2.0);
  report(5, direction && signs && sizes && r.wall <= 900.0,
         fmt("dx %.3f m, dy %.3f m (0.37..1.48), dz %.4f m (0.015..0.06), dyaw %.1f deg (16.4..65.6), %.0f s (<= 900 s)", dx, dy, dz,
             dyaw, r.wall));
}

void criterion_6(const Run& r) {
  if (!r.error.empty()) return report(6, false, "run failed: " + r.error);
  const json& m = r.result.summary["metrics"];
  const double rms = num(m, "rms_planar_error_m"), psi = std::abs(num(m, "final_yaw_error_deg")), tilt = num(m, "max_tilt_deg");
  report(6, rms < 0.3 && psi < 5.0 && tilt < 10.0 && r.wall <= 1200.0,
         fmt("RMS planar error %.3f m (< 0.3), final yaw error %.2f deg (< 5), max tilt %.2f deg (< 10), %.0f s (<= 1200 s); "
             "reference needs %.3f m/s",
             rms, psi, tilt, r.wall, num(m, "required_speed_m_s")));
}

void criterion_7(const Run& step, const std::map<std::string, Run>& all, double wall) {
  if (!step.error.empty()) return report(7, false, "run failed: " + step.error);
  const json& m = step.result.summary["metrics"];
  const double dz = num(m["z"], "max_deviation_from_sampled_prediction"), dpsi = num(m["yaw"], "max_deviation_from_sampled_prediction");
  const double cz = num(m["z"], "max_deviation_from_continuous_prediction"), cpsi = num(m["yaw"], "max_deviation_from_continuous_prediction");
  double roundtrip = 0.0;
  long violations = 0;
  for (const auto& [name, r] : all) {
    if (!r.error.empty()) continue;
    const json& a = r.result.summary["actuation"];
    roundtrip = std::max(roundtrip, num(a, "allocation_roundtrip_max"));
    for (const auto& [key, v] : a.items())
      if (v.is_object()) violations += v["pair_exclusivity_violations"].get<long>();
  }
  report(7, dz < 0.02 && dpsi < 0.02 && roundtrip < 1e-9 && violations == 0 && wall < 60.0,
         fmt("step deviation z %.4f, yaw %.4f (< 0.02, sampled-data prediction; continuous: %.4f, %.4f), allocation round trip %.2e "
             "(< 1e-9), exclusivity violations %ld (0), %.1f s (< 60 s)",
             dz, dpsi, cz, cpsi, roundtrip, violations, wall));
}

void criterion_8(const std::map<std::string, Run>& all) {
  long above = 0, saturated = 0;
  bool exact = true;
  double max_w = 0.0, cap = 0.0;
  for (const auto& [name, r] : all) {
    if (!r.error.empty()) continue;
    for (const auto& [key, v] : r.result.summary["actuation"].items()) {
      if (!v.is_object()) continue;
      above += v["rows_above_cap"].get<long>();
      saturated += v["saturated_rows"].get<long>();
      exact = exact && v["cap_exact_at_saturation"].get<bool>();
      max_w = std::max(max_w, num(v, "max_abs_omega"));
      cap = num(v, "cap_rad_s");
    }
  }
  report(8, above == 0 && exact && saturated > 0 && max_w <= cap,
         fmt("rows above cap %ld (0), saturated rows %ld, max |w| %.6f rad/s vs cap %.6f, exact at saturation: %s", above, saturated, max_w,
             cap, exact ? "yes" : "no"));
}

void criterion_9(const Run& r) {
  if (!r.error.empty()) return report(9, false, "run failed: " + r.error);
  const json& m = r.result.summary["metrics"];
  const double ratio = num(m, "speed_ratio");
  double ez = 0.0, epsi = 0.0;
  for (const char* k : {"full", "impaired"}) {
    ez = std::max(ez, num(m[k], "max_depth_error_m"));
    epsi = std::max(epsi, num(m[k], "max_yaw_error_deg"));
  }
  report(9, ratio >= 0.3 && ratio <= 0.7 && ez < 0.1 && epsi < 25.0 && r.wall <= 1200.0,
         fmt("speed ratio %.3f (0.3..0.7; full %.4f m/s, impaired %.4f m/s), max |e_z| %.4f m (< 0.1), max |e_yaw| %.2f deg (< 25), "
             "%.0f s (<= 1200 s)",
             ratio, num(m["full"], "speed_m_s"), num(m["impaired"], "speed_m_s"), ez, epsi, r.wall));
}

void criterion_10(const std::map<std::string, Run>& first, const std::map<std::string, Run>& second) {
  int identical = 0, total = 0;
  std::string differing;
  bool in_time = true;
  for (const auto& [name, a] : first) {
    const Run& b = second.at(name);
    if (!a.error.empty() || !b.error.empty()) {
      differing += " " + name + "(failed)";
      ++total;
      continue;
    }
    bool same = a.result.logs.size() == b.result.logs.size();
    for (std::size_t i = 0; same && i < a.result.logs.size(); ++i) same = csv(a.result.logs[i].second) == csv(b.result.logs[i].second);
    ++total;
    if (same) ++identical;
    else differing += " " + name;
    in_time = in_time && b.wall < 2.0 * a.wall + 1.0;
  }
  report(10, identical == total && in_time,
         fmt("%d/%d shipped scenarios byte-identical on rerun%s", identical, total, differing.empty() ? "" : (":" + differing).c_str()));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();

  std::map<std::string, Run> first, second;
  for (const std::string& id : scenario_ids()) {
    first[id] = run(id);
    std::printf("  ran %-18s %7.1f s%s\n", id.c_str(), first[id].wall, first[id].error.empty() ? "" : ("  ERROR " + first[id].error).c_str());
    std::fflush(stdout);
  }
  criterion_5(first.at("openloop-fig2c"));
  criterion_6(first.at("semicircle"));
  criterion_7(first.at("step-response"), first, first.at("step-response").wall);
  criterion_8(first);
  criterion_9(first.at("redundancy"));
  for (const std::string& id : scenario_ids()) second[id] = run(id);
  criterion_10(first, second);

  std::printf("%d of 10 criteria failed\n", failures);
  return std::min(failures, 125);
}
