#include "zodiaq/calibration.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace zodiaq;

namespace {

ScenarioConfig shipped(const std::string& name) { return load_config(std::string(ZODIAQ_CONFIG_DIR) + "/" + name + ".json"); }

std::string csv(const TimeSeriesLog& log) {
  std::ostringstream os;
  log.write_csv(os);
  return os.str();
}

Vec3 endpoint(const TimeSeriesLog& log) {
  const std::size_t n = log.size() - 1;
  return {log.at(n, "x"), log.at(n, "y"), log.at(n, "z")};
}

}  // namespace

TEST(TwinScenario, RunsAreBitIdentical) {
  ScenarioConfig c = shipped("openloop-fig2c");
  c.duration = 4.0;
  const ScenarioResult a = run_scenario(c), b = run_scenario(c);
  ASSERT_EQ(a.logs.size(), 1u);
  EXPECT_EQ(csv(a.logs[0].second), csv(b.logs[0].second));
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
}

TEST(TwinScenario, HalvingTheStepBarelyMovesTheEndpoint) {
  ScenarioConfig c = shipped("openloop-fig2c");
  c.duration = 10.0;
  const TimeSeriesLog coarse = run_scenario(c).logs[0].second;
  c.integrator.dt *= 0.5;
  const TimeSeriesLog fine = run_scenario(c).logs[0].second;
  const Vec3 start(coarse.at(0, "x"), coarse.at(0, "y"), coarse.at(0, "z"));
  const double travel = (endpoint(fine) - start).norm();
  ASSERT_GT(travel, 0.1);
  EXPECT_LT((endpoint(coarse) - endpoint(fine)).norm() / travel, 0.01);
}

TEST(SimpleScenario, HoldWithoutDisturbanceStaysPut) {
  ScenarioConfig c = shipped("depth-yaw-hold");
  c.plant = PlantKind::simple_model;
  c.disturbances.clear();
  c.controller.depth_noise = c.controller.yaw_noise = 0.0;
  c.duration = 20.0;
  const json m = run_scenario(c).summary["metrics"];
  EXPECT_LT(m["max_depth_error_m"].get<double>(), 1e-9);
  EXPECT_LT(m["max_yaw_error_deg"].get<double>(), 1e-9);
}

// Any residual error spins a motor; the bent hooks then shake the shell once
// per revolution and the loop settles into a small bounded cycle.
TEST(TwinScenario, HoldWithoutDisturbanceStaysBounded) {
  ScenarioConfig c = shipped("depth-yaw-hold");
  c.disturbances.clear();
  c.controller.depth_noise = c.controller.yaw_noise = 0.0;
  c.duration = 20.0;
  const json m = run_scenario(c).summary["metrics"];
  EXPECT_LT(m["max_depth_error_m"].get<double>(), 0.1);
  EXPECT_LT(m["max_yaw_error_deg"].get<double>(), 25.0);
  EXPECT_LT(m["max_tilt_deg"].get<double>(), 10.0);
}

TEST(TwinScenario, ViewpointMirrorsTheOpenLoopDrift) {
  ScenarioConfig c = shipped("openloop-fig2c");
  c.duration = 6.0;
  // Rod lift points along t x v, which does not flip under reflection.
  c.hydro.rod_cl = 0.0;
  const json inside = run_scenario(c).summary["metrics"];
  c.rotation_viewpoint = c.rotation_viewpoint == "inside" ? "outside" : "inside";
  const json outside = run_scenario(c).summary["metrics"];
  // The four driven faces are symmetric about the x-z plane.
  EXPECT_NEAR(inside["dx_m"].get<double>(), outside["dx_m"].get<double>(), 1e-6);
  EXPECT_NEAR(inside["dy_m"].get<double>(), -outside["dy_m"].get<double>(), 1e-6);
  EXPECT_NEAR(inside["dz_m"].get<double>(), outside["dz_m"].get<double>(), 1e-6);
  EXPECT_NEAR(inside["dyaw_deg"].get<double>(), -outside["dyaw_deg"].get<double>(), 1e-4);
}

TEST(TwinScenario, DivergenceIsReportedWithTime) {
  ScenarioConfig c = shipped("openloop-fig2c");
  c.duration = 2.0;
  c.integrator.max_speed = 1e-3;
  try {
    run_scenario(c);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_GT(e.time, 0.0);
    EXPECT_LE(e.time, 2.0);
  }
}

TEST(PassiveStability, TiltAndDepthReturnWithAtMostOneOvershoot) {
  const ScenarioResult r = run_scenario(shipped("passive-stability"));
  const json& m = r.summary["metrics"];
  EXPECT_LT(m["tilt_final_deg"].get<double>(), 0.1 * m["tilt_initial_deg"].get<double>());
  EXPECT_LE(m["tilt_overshoots"].get<int>(), 1);
  EXPECT_LE(m["depth_overshoots"].get<int>(), 1);
  const TimeSeriesLog& log = r.logs[0].second;
  EXPECT_GT(m["final_z_m"].get<double>(), log.at(0, "z") + 0.1);
}

TEST(SimpleScenario, StepResponseMatchesSampledPrediction) {
  const json m = run_scenario(shipped("step-response")).summary["metrics"];
  for (const char* ch : {"z", "yaw"}) EXPECT_LT(m[ch]["max_deviation_from_sampled_prediction"].get<double>(), 0.02) << ch;
}

TEST(SimpleScenario, SemicircleKeepsActuationInvariants) {
  ScenarioConfig c = shipped("semicircle");
  c.plant = PlantKind::simple_model;
  const ScenarioResult r = run_scenario(c);
  const json& a = r.summary["actuation"];
  EXPECT_EQ(a["run"]["rows_above_cap"].get<int>(), 0);
  EXPECT_EQ(a["run"]["pair_exclusivity_violations"].get<int>(), 0);
  EXPECT_TRUE(a["run"]["cap_exact_at_saturation"].get<bool>());
  EXPECT_LT(a["allocation_roundtrip_max"].get<double>(), 1e-9);
  EXPECT_GT(a["control_ticks"].get<int>(), 500);
}

TEST(SimpleScenario, RedundancyNotesIdenticalRuns) {
  ScenarioConfig c = shipped("redundancy");
  c.plant = PlantKind::simple_model;
  c.leg_time = 10.0;
  const json m = run_scenario(c).summary["metrics"];
  EXPECT_NEAR(m["speed_ratio"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(m.contains("note"));
}

TEST(Calibration, ThrustFitReachesTargetsOnSimplePlant) {
  const ScenarioConfig c = shipped("semicircle");
  const SpeedTargets target = prototype_targets(c.assembly);
  const ThrustCalibration r = calibrate_thrust(controller_model(c), target);
  EXPECT_NEAR(r.achieved.speed / target.speed, 1.0, 1e-4);
  EXPECT_NEAR(r.achieved.yaw_rate / target.yaw_rate, 1.0, 1e-4);
}

TEST(Calibration, ShippedCoefficientsHitPrototypeSpeedsWithinTolerance) {
  const ScenarioConfig c = shipped("semicircle");
  const SimpleModelParams p = controller_model(c);
  const SpeedTargets target = prototype_targets(c.assembly);
  EXPECT_NEAR(simple_steady_state(p, full_forward(p)).speed / target.speed, 1.0, 0.25);
  EXPECT_NEAR(simple_steady_state(p, full_yaw(p)).yaw_rate / target.yaw_rate, 1.0, 0.25);
}
