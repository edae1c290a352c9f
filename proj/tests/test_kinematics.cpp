#include "zodiaq/kinematics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace zodiaq;

namespace {

const ZodiaqBuild& build() {
  static const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  return b;
}

GeneralizedState random_state(const Assembly& a, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GeneralizedState st = GeneralizedState::zero(a);
  Vec6 base;
  for (int i = 0; i < 6; ++i) base[i] = u(rng);
  st.base = exp_twist(base);
  for (int i = 0; i < a.num_links(); ++i) {
    const Link& l = a.link(i);
    for (int k = 0; k < l.dof_count; ++k) {
      const int d = l.dof_offset + k;
      if (i == 0) continue;
      st.q[d] = l.is_soft() ? 6.0 * u(rng) : M_PI * u(rng);
    }
  }
  for (int d = 0; d < a.num_dofs(); ++d) st.qdot[d] = (a.is_prescribed(d) ? 10.0 : 2.0) * u(rng);
  return st;
}

// Body-frame derivative of the section pose along coordinate k (central differences).
Vec6 fd_column(const Assembly& a, const GeneralizedState& st, int link, double x, int k, double h) {
  GeneralizedState sp = st, sm = st;
  sp.q[k] += h;
  sm.q[k] -= h;
  const Pose g = forward_kinematics(a, st, link, x).pose;
  const Pose gp = forward_kinematics(a, sp, link, x).pose;
  const Pose gm = forward_kinematics(a, sm, link, x).pose;
  return (log_pose(g.inverse() * gp) - log_pose(g.inverse() * gm)) / (2.0 * h);
}

}  // namespace

TEST(ForwardKinematics, ReferenceConfigurationFollowsHookTangent) {
  const ZodiaqBuild& b = build();
  const GeneralizedState st = GeneralizedState::zero(b.assembly);
  for (int m = 1; m <= kNumFaces; ++m) {
    const int rod = b.modules[static_cast<std::size_t>(m - 1)].flagellum;
    const int hook = b.modules[static_cast<std::size_t>(m - 1)].hook;
    const Pose base = forward_kinematics(b.assembly, st, rod, 0.0).pose;
    const Pose hook_frame = forward_kinematics(b.assembly, st, hook).pose;
    const Pose expected = hook_frame * b.assembly.link(rod).soft().attach;
    EXPECT_LT((base.p - expected.p).norm(), 1e-15);
    const Pose tip = forward_kinematics(b.assembly, st, rod, 0.15).pose;
    EXPECT_LT((tip.p - (base.p + 0.15 * base.R.col(0))).norm(), 1e-14);
  }
  const Pose shell = forward_kinematics(b.assembly, st, 0).pose;
  EXPECT_EQ(shell.R, Mat3::Identity());
  EXPECT_EQ(shell.p, Vec3::Zero());
}

TEST(ForwardKinematics, RigidTransportOfTheShell) {
  const ZodiaqBuild& b = build();
  std::mt19937 rng(11);
  GeneralizedState st = random_state(b.assembly, rng);
  st.base = Pose::identity();
  GeneralizedState up = st;
  up.base = Pose::translation(Vec3(0, 0, 1));
  for (int i = 0; i < b.assembly.num_links(); ++i) {
    const double x = b.assembly.link(i).is_soft() ? 0.1 : 0.0;
    const Vec3 d = forward_kinematics(b.assembly, up, i, x).pose.p - forward_kinematics(b.assembly, st, i, x).pose.p;
    EXPECT_LT((d - Vec3(0, 0, 1)).norm(), 1e-14);
  }
}

TEST(ForwardKinematics, ConstantCurvatureArc) {
  const ZodiaqBuild& b = build();
  const int rod = b.modules[0].flagellum;
  const Link& l = b.assembly.link(rod);
  const double length = l.soft().length;
  GeneralizedState st = GeneralizedState::zero(b.assembly);
  st.q[l.dof_offset + 4] = M_PI / (2.0 * length);  // constant bend-z
  const Pose base = forward_kinematics(b.assembly, st, rod, 0.0).pose;
  const Pose tip = forward_kinematics(b.assembly, st, rod, length).pose;
  const Pose rel = base.inverse() * tip;
  const double radius = 2.0 * length / M_PI;
  EXPECT_LT((rel.p - Vec3(radius, radius, 0.0)).norm(), 1e-14);
  EXPECT_LT((rel.R.col(0) - Vec3::UnitY()).norm(), 1e-14);
  // Intermediate point on the arc.
  const Pose mid = base.inverse() * forward_kinematics(b.assembly, st, rod, 0.37 * length).pose;
  EXPECT_NEAR((mid.p - Vec3(0.0, radius, 0.0)).norm(), radius, 1e-14);
}

TEST(ForwardKinematics, ErrorsOnBadQuery) {
  const ZodiaqBuild& b = build();
  const GeneralizedState st = GeneralizedState::zero(b.assembly);
  EXPECT_THROW(forward_kinematics(b.assembly, st, 99), std::out_of_range);
  EXPECT_THROW(forward_kinematics(b.assembly, st, b.modules[0].flagellum, 0.2), std::out_of_range);
  EXPECT_THROW(forward_kinematics(b.assembly, st, b.modules[0].flagellum, -0.01), std::out_of_range);
}

TEST(ForwardKinematics, SweepMatchesSectionQueries) {
  // Both paths use different Magnus grids; refine so that they agree to
  // well below the comparison tolerance.
  ZodiaqParams params;
  params.flagellum.magnus_substeps = 16;
  const ZodiaqBuild b = assemble_zodiaq(params);
  std::mt19937 rng(12);
  const GeneralizedState st = random_state(b.assembly, rng);
  const KinematicModel km(b.assembly);
  KinematicModel::Sweep sw;
  km.sweep(st, sw, {true});
  for (int i = 0; i < b.assembly.num_links(); ++i) {
    const Link& l = b.assembly.link(i);
    if (!l.is_soft()) {
      const SectionFrame f = km.section(st, i, 0.0, {true});
      EXPECT_LT((f.g.p - sw.link[static_cast<std::size_t>(i)].g.p).norm(), 1e-14);
      continue;
    }
    const auto& grid = km.grid(i);
    const auto& nodes = sw.rod[static_cast<std::size_t>(i)];
    for (std::size_t k : {std::size_t{3}, grid.x.size() - 1}) {
      const SectionFrame f = km.section(st, i, grid.x[k], {true});
      EXPECT_LT((f.g.p - nodes[k].g.p).norm(), 1e-10);
      EXPECT_LT((f.eta - nodes[k].eta).norm(), 1e-8);
      EXPECT_LT((f.J - nodes[k].J).norm(), 1e-8);
      EXPECT_LT((f.bias - nodes[k].bias).norm(), 1e-7);
    }
  }
}

TEST(Jacobian, ShellBlockIsIdentity) {
  const ZodiaqBuild& b = build();
  std::mt19937 rng(13);
  const GeneralizedState st = random_state(b.assembly, rng);
  const JacobianResult j = jacobian(b.assembly, st, 0);
  EXPECT_EQ(Mat6(j.J.leftCols(6)), Mat6::Identity());
  EXPECT_TRUE(j.J.rightCols(b.assembly.num_dofs() - 6).isZero(0.0));
}

TEST(Jacobian, ColumnsOffThePathVanish) {
  const ZodiaqBuild& b = build();
  std::mt19937 rng(14);
  const GeneralizedState st = random_state(b.assembly, rng);
  const int rod = b.modules[6].flagellum;
  const JacobianResult j = jacobian(b.assembly, st, rod, 0.1);
  const auto& path = b.assembly.link(rod).path_dofs;
  for (int d = 0; d < b.assembly.num_dofs(); ++d) {
    if (std::find(path.begin(), path.end(), d) != path.end()) continue;
    EXPECT_TRUE(j.J.col(d).isZero(0.0)) << d;
    EXPECT_TRUE(j.Jdot.col(d).isZero(0.0)) << d;
  }
}

TEST(Jacobian, MatchesFiniteDifferencesOn50RandomStates) {
  const ZodiaqBuild& b = build();
  const Assembly& a = b.assembly;
  std::mt19937 rng(15);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const GeneralizedState st = random_state(a, rng);
    const int m = trial % kNumFaces;
    const int rod = b.modules[static_cast<std::size_t>(m)].flagellum;
    const double x = std::uniform_real_distribution<double>(0.0, 0.15)(rng);
    for (auto [link, xq] : {std::pair{rod, x}, std::pair{b.modules[static_cast<std::size_t>(m)].hook, 0.0}}) {
      const JacobianResult j = jacobian(a, st, link, xq);
      for (int k : a.link(link).path_dofs) {
        const Vec6 fd = fd_column(a, st, link, xq, k, 1e-6);
        const double err = (fd - j.J.col(k)).norm() / std::max(1.0, j.J.col(k).norm());
        worst = std::max(worst, err);
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Jacobian, TimeDerivativeMatchesFiniteDifferences) {
  const ZodiaqBuild& b = build();
  const Assembly& a = b.assembly;
  std::mt19937 rng(16);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GeneralizedState st = random_state(a, rng);
    const int rod = b.modules[static_cast<std::size_t>(trial % kNumFaces)].flagellum;
    const double h = 1e-6;
    GeneralizedState sp = st, sm = st;
    sp.q += h * st.qdot;
    sm.q -= h * st.qdot;
    // The base chart derivative is the body twist only at the chart origin;
    // the body Jacobian does not depend on the base pose.
    sp.q.head<6>().setZero();
    sm.q.head<6>().setZero();
    const JacobianResult j = jacobian(a, st, rod, 0.15);
    const Eigen::MatrixXd fd = (jacobian(a, sp, rod, 0.15).J - jacobian(a, sm, rod, 0.15).J) / (2.0 * h);
    worst = std::max(worst, (fd - j.Jdot).norm() / std::max(1.0, j.Jdot.norm()));
    // Jdot * qdot equals the bias term used by the dynamics.
    const KinematicModel km(a);
    const SectionFrame f = km.section(st, rod, 0.15);
    EXPECT_LT((j.Jdot * st.qdot - f.bias).norm(), 1e-9 * std::max(1.0, f.bias.norm()));
    EXPECT_LT((j.J * st.qdot - f.eta).norm(), 1e-12 * std::max(1.0, f.eta.norm()));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Kinematics, Inextensibility) {
  const ZodiaqBuild& b = build();
  std::mt19937 rng(17);
  const GeneralizedState st = random_state(b.assembly, rng);
  const KinematicModel km(b.assembly);
  for (const auto& mod : b.modules)
    for (double x : {0.0, 0.05, 0.15}) EXPECT_EQ(km.strain(st, mod.flagellum, x).tail<3>(), Vec3::UnitX());
}

TEST(Kinematics, MagnusSubstepsConverge) {
  // A rod with strongly varying strain: refining the Magnus grid converges at fourth order.
  Assembly a;
  RigidLinkSpec root;
  root.joint = JointKind::fixed;
  a.add_rigid("anchor", -1, root);
  SoftLinkSpec rod;
  rod.basis_order = {2, 2, 2};
  a.add_soft("rod", 0, rod);
  a.finalize();
  GeneralizedState st = GeneralizedState::zero(a);
  st.q << 10, 5, -8, 12, -20, 6, 9, 14, -11;
  auto tip = [&](int substeps) {
    Assembly b;
    b.add_rigid("anchor", -1, root);
    SoftLinkSpec r = rod;
    r.magnus_substeps = substeps;
    b.add_soft("rod", 0, r);
    b.finalize();
    return forward_kinematics(b, st, 1, rod.length).pose.p;
  };
  const Vec3 ref = tip(64);
  const double e1 = (tip(1) - ref).norm(), e2 = (tip(2) - ref).norm();
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e2, 1e-6);
}
