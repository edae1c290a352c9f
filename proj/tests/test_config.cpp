#include "zodiaq/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace zodiaq;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("zodiaq_cfg_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

bool mentions(const std::vector<Diagnostic>& diags, const std::string& location) {
  for (const Diagnostic& d : diags)
    if (d.location == location) return true;
  return false;
}

const char* kMinimal = R"({"name": "t", "scenario": {"id": "passive-stability", "duration": 1}})";

}  // namespace

TEST(Config, MinimalDocumentUsesDefaults) {
  TempDir dir;
  const ScenarioConfig c = load_config(dir.write("a.json", kMinimal));
  EXPECT_EQ(c.name, "t");
  EXPECT_EQ(c.scenario, "passive-stability");
  EXPECT_DOUBLE_EQ(c.integrator.dt, 2e-3);
  EXPECT_EQ(c.rotation_viewpoint, "inside");
}

TEST(Config, IncludesMergeWithLaterKeysWinning) {
  TempDir dir;
  dir.write("blocks/base.json", R"({"damping_beta": 0.2, "integrator": {"dt": 0.001, "log_rate": 20}})");
  dir.write("blocks/mid.json", R"({"include": "base.json", "integrator": {"log_rate": 10}})");
  const fs::path top = dir.write("top.json", R"(
    // comments are allowed
    {"include": ["blocks/mid.json"], "name": "t", "damping_beta": 0.1,
     "scenario": {"id": "passive-stability", "duration": 1}})");
  const ScenarioConfig c = load_config(top);
  EXPECT_DOUBLE_EQ(c.damping_beta, 0.1);
  EXPECT_DOUBLE_EQ(c.integrator.dt, 0.001);
  EXPECT_DOUBLE_EQ(c.integrator.log_rate, 10.0);
  EXPECT_FALSE(c.resolved.contains("include"));
}

TEST(Config, IncludeCycleIsReported) {
  TempDir dir;
  dir.write("a.json", R"({"include": "b.json"})");
  const fs::path b = dir.write("b.json", R"({"include": "a.json"})");
  const auto diags = validate_config(b);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("cycle"), std::string::npos);
}

TEST(Config, NegativeModulusNamesTheField) {
  TempDir dir;
  const auto diags = validate_config(dir.write("a.json", R"({"name": "t", "assembly": {"flagellum": {"youngs_modulus": -1}},
                                                              "scenario": {"id": "passive-stability"}})"));
  EXPECT_TRUE(mentions(diags, "/assembly/flagellum/youngs_modulus"));
}

TEST(Config, NonAntiparallelPairIsRejected) {
  TempDir dir;
  // M1 and M3 are not on opposite faces.
  const auto diags = validate_config(dir.write("a.json", R"({"name": "t",
      "controller": {"pairs": [[1, 3], [2, 4], [5, 6], [7, 8], [9, 10], [11, 12]]},
      "scenario": {"id": "passive-stability"}})"));
  EXPECT_TRUE(mentions(diags, "/controller/pairs/0"));
}

TEST(Config, UnknownKeysAndBadTypesAreDiagnosed) {
  TempDir dir;
  const auto diags = validate_config(dir.write("a.json", R"({"name": "t", "hydro": {"rod_cd_normall": 1},
                                                              "integrator": {"dt": "fast"},
                                                              "scenario": {"id": "passive-stability"}})"));
  EXPECT_TRUE(mentions(diags, "/hydro/rod_cd_normall"));
  EXPECT_TRUE(mentions(diags, "/integrator/dt"));
}

TEST(Config, UnknownScenarioIsRejected) {
  TempDir dir;
  const auto diags = validate_config(dir.write("a.json", R"({"name": "t", "scenario": {"id": "loop-the-loop"}})"));
  EXPECT_TRUE(mentions(diags, "/scenario/id"));
}

TEST(Config, MotorAboveCapIsRejected) {
  TempDir dir;
  const auto diags = validate_config(dir.write("a.json", R"({"name": "t", "scenario": {"id": "openloop-fig2c",
      "motors": [{"motor": 1, "rpm": 100000, "direction": "ccw"}]}})"));
  EXPECT_FALSE(diags.empty());
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/zodiaq.json"), ConfigError);
}

TEST(Config, HashIsStableAndSensitive) {
  TempDir dir;
  const ScenarioConfig a = load_config(dir.write("a.json", kMinimal));
  const ScenarioConfig b = load_config(dir.write("b.json", kMinimal));
  EXPECT_EQ(config_hash(a.resolved), config_hash(b.resolved));
  EXPECT_EQ(config_hash(a.resolved).size(), 16u);
  json other = a.resolved;
  other["seed"] = 7;
  EXPECT_NE(config_hash(a.resolved), config_hash(other));
}

TEST(Config, ViewpointSetsSpinSign) {
  ScenarioConfig c;
  c.rotation_viewpoint = "outside";
  EXPECT_EQ(c.spin_sign(true), 1);
  EXPECT_EQ(c.spin_sign(false), -1);
  c.rotation_viewpoint = "inside";
  EXPECT_EQ(c.spin_sign(true), -1);
}

TEST(Config, ParameterRecordsCarryProvenance) {
  ScenarioConfig c;
  bool paper = false, assumed = false;
  for (const ParameterRecord& r : parameter_records(c)) {
    paper = paper || r.provenance == Provenance::paper;
    assumed = assumed || r.provenance == Provenance::assumed;
  }
  EXPECT_TRUE(paper);
  EXPECT_TRUE(assumed);
}

TEST(ShippedConfigs, AllValidate) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(ZODIAQ_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    ++n;
    const auto diags = validate_config(e.path());
    std::string text;
    for (const Diagnostic& d : diags) text += to_string(d) + "\n";
    EXPECT_TRUE(diags.empty()) << e.path() << "\n" << text;
  }
  EXPECT_EQ(n, static_cast<int>(scenario_ids().size()));
}
