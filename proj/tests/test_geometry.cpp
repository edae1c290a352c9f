#include "zodiaq/assembly.hpp"
#include "zodiaq/geometry.hpp"

#include <gtest/gtest.h>

using namespace zodiaq;

TEST(Dodecahedron, InradiusFromVertices) {
  const Dodecahedron d = make_dodecahedron(0.10);
  EXPECT_NEAR(dodecahedron_inradius(0.10), 0.1113516, 1e-7);
  for (const Face& f : d.faces) {
    EXPECT_NEAR(f.center.norm(), 0.111352, 5e-7);
    EXPECT_LT((f.center.normalized() - f.normal).norm(), 1e-12);
  }
  // Every edge (nearest-neighbour vertex distance) equals a.
  for (std::size_t i = 0; i < d.vertices.size(); ++i) {
    double nearest = 1e9;
    for (std::size_t j = 0; j < d.vertices.size(); ++j)
      if (i != j) nearest = std::min(nearest, (d.vertices[i] - d.vertices[j]).norm());
    EXPECT_NEAR(nearest, 0.10, 1e-12);
  }
}

TEST(Dodecahedron, PairsAreAntiparallel) {
  const Dodecahedron d = make_dodecahedron(0.10);
  for (int m = 1; m <= kNumFaces; m += 2) {
    EXPECT_EQ(paired_motor(m), m + 1);
    EXPECT_EQ(paired_motor(m + 1), m);
    EXPECT_LT((d.face(m).normal + d.face(m + 1).normal).norm(), 1e-9);
  }
}

TEST(Dodecahedron, TopAndBottomFacesAreHorizontal) {
  const Dodecahedron d = make_dodecahedron(0.10);
  EXPECT_LT((d.face(3).normal - Vec3::UnitZ()).norm(), 1e-12);
  EXPECT_LT((d.face(4).normal + Vec3::UnitZ()).norm(), 1e-12);
  EXPECT_NEAR(d.face(1).normal.y(), 0.0, 1e-12);
  EXPECT_GT(d.face(1).normal.x(), 0.0);
}

TEST(Dodecahedron, FaceMountsAreRightHanded) {
  const Dodecahedron d = make_dodecahedron(0.10);
  for (const Face& f : d.faces) {
    EXPECT_LT((f.mount.R.transpose() * f.mount.R - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(f.mount.R.determinant(), 1.0, 1e-12);
    EXPECT_LT((f.mount.R.col(0) - f.normal).norm(), 1e-12);
    EXPECT_EQ(f.mount.p, f.center);
  }
}

TEST(Dodecahedron, RejectsBadEdge) { EXPECT_THROW(make_dodecahedron(0.0), std::invalid_argument); }

TEST(Assembly, DefaultBuildCounts) {
  const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  EXPECT_EQ(b.assembly.num_links(), 37);
  EXPECT_EQ(b.assembly.num_dofs(), 90);
  EXPECT_EQ(b.assembly.prescribed_dofs().size(), 12u);
  EXPECT_EQ(b.assembly.free_dofs().size(), 78u);
  for (int m = 1; m <= kNumFaces; ++m) EXPECT_TRUE(b.assembly.is_prescribed(b.assembly.motor_dof(m)));
}

TEST(Assembly, RemovalModes) {
  ZodiaqParams p;
  p.removed = {5};
  const ZodiaqBuild detached = assemble_zodiaq(p);
  EXPECT_EQ(detached.assembly.num_links(), 36);
  EXPECT_EQ(detached.assembly.num_dofs(), 84);
  EXPECT_EQ(detached.modules[4].flagellum, -1);
  EXPECT_GE(detached.modules[4].shaft, 0);

  p.removal_mode = RemovalMode::remove_module;
  const ZodiaqBuild removed = assemble_zodiaq(p);
  EXPECT_EQ(removed.assembly.num_links(), 34);
  EXPECT_EQ(removed.assembly.num_dofs(), 83);
  EXPECT_EQ(removed.assembly.prescribed_dofs().size(), 11u);
}

TEST(Assembly, MassAndBuoyancyBookkeeping) {
  const ZodiaqParams p;
  const ZodiaqBuild b = assemble_zodiaq(p);
  EXPECT_NEAR(b.assembly.total_mass(), p.total_mass, 1e-12);
  EXPECT_NEAR(b.assembly.total_volume() * p.water_density, p.total_mass, 1e-12);
}

TEST(Assembly, EveryDofInExactlyOneSlice) {
  const ZodiaqBuild b = assemble_zodiaq(ZodiaqParams{});
  std::vector<int> owner(static_cast<std::size_t>(b.assembly.num_dofs()), 0);
  for (const Link& l : b.assembly.links())
    for (int k = 0; k < l.dof_count; ++k) ++owner[static_cast<std::size_t>(l.dof_offset + k)];
  for (int c : owner) EXPECT_EQ(c, 1);
}

TEST(Assembly, ValidationDiagnostics) {
  ZodiaqParams p;
  p.flagellum.youngs_modulus = -1.0;
  EXPECT_THROW(assemble_zodiaq(p), std::invalid_argument);
  ZodiaqParams q;
  q.removed = {13};
  EXPECT_THROW(assemble_zodiaq(q), std::invalid_argument);
  ZodiaqParams heavy;
  heavy.shaft_mass = 1.0;
  EXPECT_THROW(assemble_zodiaq(heavy), std::invalid_argument);
}

TEST(Assembly, TreeValidation) {
  Assembly a;
  RigidLinkSpec root;
  root.joint = JointKind::fixed;
  a.add_rigid("root", -1, root);
  SoftLinkSpec rod;
  const int r = a.add_soft("rod", 0, rod);
  a.add_rigid("child_of_rod", r, RigidLinkSpec{});
  EXPECT_THROW(a.finalize(), std::invalid_argument);

  Assembly b;
  RigidLinkSpec bad;
  bad.joint = JointKind::revolute;
  bad.joint_axis = Vec3(1, 1, 0);
  b.add_rigid("root", -1, root);
  b.add_rigid("bad_axis", 0, bad);
  EXPECT_THROW(b.finalize(), std::invalid_argument);
}

TEST(SoftLink, LegendreBasis) {
  SoftLinkSpec s;
  s.basis_order = {2, 1, 0};
  EXPECT_EQ(s.dof_count(), 6);
  const auto phi = s.basis(0.75 * s.length);  // s = 0.5
  EXPECT_DOUBLE_EQ(phi(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(phi(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(phi(0, 2), -0.125);  // P2(0.5)
  EXPECT_DOUBLE_EQ(phi(1, 3), 1.0);
  EXPECT_DOUBLE_EQ(phi(1, 4), 0.5);
  EXPECT_DOUBLE_EQ(phi(2, 5), 1.0);
  EXPECT_TRUE(phi.bottomRows(3).isZero(0.0));
}
