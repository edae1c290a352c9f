// zodiaq: command-line front end for scenarios, plots, validation and
// calibration.
//
// Exit codes: 0 success, 1 run failure, 2 configuration failure.

#include "zodiaq/calibration.hpp"
#include "zodiaq/plot.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using namespace zodiaq;

namespace {

constexpr int kOk = 0, kRunFailure = 1, kConfigFailure = 2;

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ZODIAQ_OUTPUT_ROOT"); env && *env) return env;
  return "output";
}

/// Applies "--set /json/pointer=value" overrides; values are parsed as JSON
/// and fall back to plain strings.
void apply_overrides(json& doc, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || s.empty() || s[0] != '/') throw ConfigError("", "override '" + s + "' is not /pointer=value");
    json value;
    try {
      value = json::parse(s.substr(eq + 1));
    } catch (const json::parse_error&) {
      value = s.substr(eq + 1);
    }
    try {
      doc[json::json_pointer(s.substr(0, eq))] = value;
    } catch (const json::exception& e) {
      throw ConfigError(s.substr(0, eq), e.what());
    }
  }
}

ScenarioConfig load(const fs::path& path, const std::vector<std::string>& sets) {
  json doc = load_config_document(path);
  apply_overrides(doc, sets);
  std::vector<Diagnostic> diags;
  ScenarioConfig c = parse_config(doc, diags);
  if (diags.empty()) diags = check_physics(c);
  if (!diags.empty()) throw ConfigError(diags);
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

struct RunOutcome {
  int code = kOk;
  std::string message;
  fs::path dir;
};

RunOutcome run_one(const fs::path& config, const std::vector<std::string>& sets, const fs::path& root, bool plots) {
  RunOutcome out;
  ScenarioConfig c;
  try {
    c = load(config, sets);
  } catch (const ConfigError& e) {
    return {kConfigFailure, e.what(), {}};
  }
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioResult r = run_scenario(c);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.dir = root / c.name;
    fs::create_directories(out.dir);
    for (const auto& [suffix, log] : r.logs) {
      std::ostringstream os;
      log.write_csv(os);
      write_file(out.dir / (c.name + suffix + ".csv"), os.str());
      if (plots) emit_plots(log, out.dir, c.name + suffix);
    }
    write_file(out.dir / "summary.json", r.summary.dump(2) + "\n");
    std::ostringstream msg;
    msg << c.name << ": ok in " << std::fixed << std::setprecision(1) << wall << " s -> " << out.dir.string() << "\n"
        << r.summary["metrics"].dump(2);
    out.message = msg.str();
  } catch (const IntegrationError& e) {
    return {kRunFailure, c.name + ": " + e.what() + " (t = " + std::to_string(e.time) + " s)", {}};
  } catch (const ConfigError& e) {
    return {kConfigFailure, e.what(), {}};
  } catch (const std::exception& e) {
    return {kRunFailure, c.name + ": " + e.what(), {}};
  }
  return out;
}

json vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

int dump_geometry(const std::string& config, const std::vector<std::string>& sets) {
  ScenarioConfig c;
  if (!config.empty()) c = load(config, sets);
  const ZodiaqBuild b = assemble_zodiaq(c.assembly);
  const SimpleModelParams p = controller_model(c);
  json faces = json::array();
  for (int m = 1; m <= kNumFaces; ++m) {
    const Face& f = b.shell.face(m);
    const double az = std::atan2(f.normal.y(), f.normal.x()) * 180.0 / M_PI;
    const double el = std::asin(std::clamp(f.normal.z(), -1.0, 1.0)) * 180.0 / M_PI;
    faces.push_back({{"motor", m},
                     {"pair_motor", paired_motor(m)},
                     {"center", vec(f.center)},
                     {"normal", vec(f.normal)},
                     {"azimuth_deg", std::abs(el) > 89.0 ? 0.0 : az},
                     {"elevation_deg", el},
                     {"spin", p.spin[static_cast<std::size_t>(m - 1)]}});
  }
  json out = {{"edge_length", b.shell.edge_length},
              {"inradius", b.shell.inradius()},
              {"links", b.assembly.num_links()},
              {"dofs", b.assembly.num_dofs()},
              {"faces", faces}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin of a twelve-flagella underwater drone: scenarios, plots and calibration"};
  app.require_subcommand(1);
  std::string out_flag;
  app.add_option("-o,--output", out_flag, "Output root (default: $ZODIAQ_OUTPUT_ROOT or ./output)");

  std::string config;
  std::vector<std::string> sets;
  bool plots = false;

  auto* run = app.add_subcommand("run", "Run one scenario config");
  run->add_option("config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Override a value: /json/pointer=value (repeatable)");
  run->add_flag("--plots", plots, "Also write SVG plots");

  std::string dir;
  unsigned jobs = 1;
  auto* batch = app.add_subcommand("batch", "Run every scenario config in a directory");
  batch->add_option("dir", dir, "Directory of configs (*.json, non-recursive)")->required()->check(CLI::ExistingDirectory);
  batch->add_option("-j,--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  batch->add_flag("--plots", plots, "Also write SVG plots");

  std::string log_path;
  auto* plot = app.add_subcommand("plot", "Write SVG plots for a CSV log");
  plot->add_option("log", log_path, "CSV log")->required()->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Check a scenario config");
  validate->add_option("config", config, "Scenario config (JSON)")->required();
  validate->add_option("--set", sets, "Override a value: /json/pointer=value (repeatable)");

  auto* geometry = app.add_subcommand("dump-geometry", "Print the face table and assembly size as JSON");
  geometry->add_option("--config", config, "Take parameters from this config");

  auto* cal_drag = app.add_subcommand("calibrate-shell-drag", "Fit the shell's drag to the top speed and yaw rate");
  cal_drag->add_option("config", config, "Base config")->required()->check(CLI::ExistingFile);
  cal_drag->add_option("--set", sets, "Override a value: /json/pointer=value (repeatable)");

  auto* cal_thrust = app.add_subcommand("calibrate-thrust", "Fit c_thrust and c_reaction on the simple model");
  cal_thrust->add_option("config", config, "Base config")->required()->check(CLI::ExistingFile);
  cal_thrust->add_option("--set", sets, "Override a value: /json/pointer=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunOutcome r = run_one(config, sets, output_root(out_flag), plots);
      (r.code == kOk ? std::cout : std::cerr) << r.message << "\n";
      return r.code;
    }

    if (*batch) {
      std::vector<fs::path> configs;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") configs.push_back(e.path());
      std::sort(configs.begin(), configs.end());
      if (configs.empty()) {
        std::cerr << "no *.json configs in " << dir << "\n";
        return kConfigFailure;
      }
      std::vector<RunOutcome> results(configs.size());
      std::atomic<std::size_t> next{0};
      std::mutex io;
      const fs::path root = output_root(out_flag);
      auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          results[i] = run_one(configs[i], {}, root, plots);
          std::lock_guard<std::mutex> lock(io);
          std::cout << (results[i].code == kOk ? "[ok]   " : "[FAIL] ") << configs[i].filename().string() << "\n";
        }
      };
      std::vector<std::thread> pool;
      for (unsigned k = 0; k < std::min<std::size_t>(jobs, configs.size()); ++k) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      int code = kOk;
      for (std::size_t i = 0; i < configs.size(); ++i) {
        if (results[i].code == kOk) continue;
        std::cerr << configs[i].filename().string() << ": " << results[i].message << "\n";
        code = std::max(code, results[i].code);
      }
      return code;
    }

    if (*plot) {
      std::ifstream in(log_path);
      const TimeSeriesLog log = TimeSeriesLog::read_csv(in);
      const fs::path p(log_path);
      const fs::path dest = out_flag.empty() ? p.parent_path() : fs::path(out_flag);
      for (const auto& f : emit_plots(log, dest.empty() ? fs::path(".") : dest, p.stem().string())) std::cout << f.string() << "\n";
      return kOk;
    }

    if (*validate) {
      std::vector<Diagnostic> diags;
      try {
        json doc = load_config_document(config);
        apply_overrides(doc, sets);
        const ScenarioConfig c = parse_config(doc, diags);
        if (diags.empty()) diags = check_physics(c);
      } catch (const ConfigError& e) {
        diags = e.diagnostics;
      }
      for (const Diagnostic& d : diags) std::cout << config << ": " << to_string(d) << "\n";
      if (diags.empty()) std::cout << config << ": valid\n";
      return diags.empty() ? kOk : kConfigFailure;
    }

    if (*geometry) return dump_geometry(config, sets);

    if (*cal_drag) {
      const ScenarioConfig c = load(config, sets);
      const SpeedTargets target = prototype_targets(c.assembly);
      const DragCalibration r = calibrate_shell_drag(c, target);
      json block = {{"hydro",
                     {{"shell_drag", vec_json(r.shell_drag.diagonal())}, {"shell_linear_drag", vec_json(r.shell_linear_drag.diagonal())}}}};
      std::cerr << "targets " << target.speed << " m/s, " << target.yaw_rate << " rad/s; achieved " << r.achieved.speed << " m/s, "
                << r.achieved.yaw_rate << " rad/s after " << r.iterations << " iteration(s); scales " << r.scale << " (translation), "
                << r.rotation_scale << " (rotation)\n";
      std::cout << block.dump(2) << "\n";
      const bool ok = std::abs(r.achieved.speed / target.speed - 1.0) < 0.25 && std::abs(r.achieved.yaw_rate / target.yaw_rate - 1.0) < 0.25;
      return ok ? kOk : kRunFailure;
    }

    if (*cal_thrust) {
      const ScenarioConfig c = load(config, sets);
      const SpeedTargets target = prototype_targets(c.assembly);
      const ThrustCalibration r = calibrate_thrust(controller_model(c), target);
      json block = {{"controller", {{"c_thrust", r.c_thrust}, {"c_reaction", r.c_reaction}}}};
      std::cerr << "targets " << target.speed << " m/s, " << target.yaw_rate << " rad/s; achieved " << r.achieved.speed << " m/s, "
                << r.achieved.yaw_rate << " rad/s after " << r.iterations << " iteration(s)\n";
      std::cout << block.dump(2) << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
