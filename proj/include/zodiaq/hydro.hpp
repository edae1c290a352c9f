#pragma once

// Environmental loads: gravity, buoyancy, Morison-type quadratic drag and lift
// on rod sections, lumped 6-DoF drag and added mass on the shell.

#include "zodiaq/kinematics.hpp"

#include <cmath>
#include <optional>

namespace zodiaq {

struct HydroParams {
  double water_density = 1000.0;
  double gravity = 9.81;  // along world -z
  double rod_cd_normal = 1.1;
  double rod_cd_tangent = 0.01;
  double rod_cl = 0.0;
  double rod_ca = 1.0;
  /// Quadratic drag of the shell: F_i = -D_ii |eta_i| eta_i (diagonal).
  Mat6 shell_drag = Vec6(0.02, 0.02, 0.02, 60.0, 60.0, 60.0).asDiagonal();
  /// Linear drag of the shell: F = -D eta.
  Mat6 shell_linear_drag = Vec6(0.1, 0.1, 0.02, 0.0, 0.0, 0.0).asDiagonal();
  Mat6 shell_added_mass = Vec6(0.002, 0.002, 0.002, 5.3, 5.3, 5.3).asDiagonal();
  /// Free-surface height; when unset the body is treated as fully submerged.
  std::optional<double> surface_z;

  /// No fluid; optional uniform gravity.
  static HydroParams vacuum(double gravity = 0.0) {
    HydroParams p;
    p.water_density = 0.0;
    p.gravity = gravity;
    p.shell_drag.setZero();
    p.shell_linear_drag.setZero();
    p.shell_added_mass.setZero();
    return p;
  }
};

/// Lumped hydrostatic description of a rigid body.
struct BuoyancyModel {
  double mass = 0.0;
  Vec3 center_of_gravity = Vec3::Zero();
  double displaced_volume = 0.0;
  Vec3 center_of_buoyancy = Vec3::Zero();

  /// Radius of the sphere of equal volume (free-surface crossing model).
  double equivalent_radius() const { return std::cbrt(3.0 * displaced_volume / (4.0 * M_PI)); }
};

/// Submerged volume fraction of a sphere of radius r whose centre lies
/// `depth` below the free surface (negative = above).
inline double submerged_fraction(double depth, double r) {
  if (r <= 0.0) return depth >= 0.0 ? 1.0 : 0.0;
  if (depth >= r) return 1.0;
  if (depth <= -r) return 0.0;
  const double h = r + depth;  // cap height
  return h * h * (3.0 * r - h) / (4.0 * r * r * r);
}

/// Gravity at the centre of gravity plus buoyancy at the centre of buoyancy,
/// as a body wrench about the body frame origin.
inline Wrench hydrostatic_wrench(const Pose& g, const BuoyancyModel& b, const HydroParams& p) {
  double volume = b.displaced_volume;
  if (p.surface_z) volume *= submerged_fraction(*p.surface_z - (g * b.center_of_buoyancy).z(), b.equivalent_radius());
  const Vec3 down = g.R.transpose() * Vec3(0.0, 0.0, -p.gravity);
  const Vec3 weight = b.mass * down;
  const Vec3 lift = -p.water_density * volume * down;
  return make_twist(b.center_of_gravity.cross(weight) + b.center_of_buoyancy.cross(lift), weight + lift);
}

/// Hydrostatics plus lumped quadratic and linear drag of the shell.
inline Wrench shell_load(const Pose& g, const Twist& eta, const BuoyancyModel& b, const HydroParams& p) {
  Wrench w = hydrostatic_wrench(g, b, p);
  for (int i = 0; i < 6; ++i) w[i] -= p.shell_drag(i, i) * std::abs(eta[i]) * eta[i];
  w.noalias() -= p.shell_linear_drag * eta;
  return w;
}

/// Load per unit length on a rod section (section body frame, axis = local x):
/// net weight, quadratic normal drag on the diameter, quadratic tangential
/// drag on the perimeter, and lift orthogonal to the axis and normal flow.
inline Wrench rod_load_density(const Pose& g, const Twist& eta, const SoftLinkSpec& rod, const HydroParams& p) {
  const double area = rod.area();
  const double d = 2.0 * rod.radius;
  double rho_w = p.water_density;
  if (p.surface_z && g.p.z() > *p.surface_z) rho_w = 0.0;

  const Vec3 down = g.R.transpose() * Vec3(0.0, 0.0, -p.gravity);
  Vec3 f = (rod.density - rho_w) * area * down;

  const Vec3 v = eta.tail<3>();
  const Vec3 vt(v.x(), 0.0, 0.0);
  const Vec3 vn(0.0, v.y(), v.z());
  const double vn_norm = vn.norm();
  f -= 0.5 * rho_w * p.rod_cd_normal * d * vn_norm * vn;
  f -= 0.5 * rho_w * p.rod_cd_tangent * M_PI * d * std::abs(v.x()) * vt;
  f += 0.5 * rho_w * p.rod_cl * d * vn_norm * Vec3::UnitX().cross(vn);
  return make_twist(Vec3::Zero(), f);
}

/// Transverse added mass per unit length of a rod section.
inline Mat6 rod_added_mass_density(const SoftLinkSpec& rod, const HydroParams& p) {
  const double m = p.water_density * p.rod_ca * rod.area();
  return Vec6(0.0, 0.0, 0.0, 0.0, m, m).asDiagonal();
}

inline BuoyancyModel buoyancy_of(const RigidLinkSpec& r) {
  return {r.mass, r.center_of_mass, r.volume, r.center_of_buoyancy};
}

/// Generalized added-mass matrix: sum of J^T M_a J over rod quadrature nodes
/// and the shell.
inline Eigen::MatrixXd added_mass_contribution(const Assembly& a, const GeneralizedState& st, const HydroParams& p) {
  const KinematicModel km(a);
  KinematicModel::Sweep sw;
  km.sweep(st, sw);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.num_dofs(), a.num_dofs());
  for (int i = 0; i < a.num_links(); ++i) {
    const Link& l = a.link(i);
    if (i == 0 && a.floating_base()) {
      const Matrix6X& J = sw.link[0].J;
      const Eigen::MatrixXd mp = J.transpose() * p.shell_added_mass * J;
      m(l.path_dofs, l.path_dofs) += mp;
    }
    if (!l.is_soft()) continue;
    const Mat6 ma = rod_added_mass_density(l.soft(), p);
    const auto& grid = km.grid(i);
    const auto& nodes = sw.rod[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (grid.weight[k] == 0.0) continue;
      const Eigen::MatrixXd mp = grid.weight[k] * (nodes[k].J.transpose() * ma * nodes[k].J);
      m(l.path_dofs, l.path_dofs) += mp;
    }
  }
  return m;
}

}  // namespace zodiaq
