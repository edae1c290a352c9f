#pragma once

// Declarative link/assembly description: rigid links with free, revolute or
// fixed joints, soft Kirchhoff rods parameterized by a Legendre strain basis,
// and the tree wiring with its generalized-coordinate map.

#include "zodiaq/geometry.hpp"
#include "zodiaq/se3.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace zodiaq {

enum class JointKind { free6, revolute, fixed };

inline const char* to_string(JointKind k) {
  switch (k) {
    case JointKind::free6: return "free6";
    case JointKind::revolute: return "revolute";
    case JointKind::fixed: return "fixed";
  }
  return "?";
}

struct RigidLinkSpec {
  JointKind joint = JointKind::fixed;
  Vec3 joint_axis = Vec3::UnitX();  // revolute only, link frame
  double mass = 0.0;
  Vec3 center_of_mass = Vec3::Zero();
  Mat3 inertia_at_com = Mat3::Zero();
  double volume = 0.0;  // displaced volume, m^3
  Vec3 center_of_buoyancy = Vec3::Zero();
  /// Joint frame relative to the parent link frame (g_f for face mounts). For
  /// an anchored root this is the pose in the world.
  Pose attach;

  Mat6 body_inertia() const { return spatial_inertia(mass, center_of_mass, inertia_at_com); }
};

/// Inextensible, unshearable rod: torsion and two bending strains, each a
/// Legendre polynomial series in the arclength.
struct SoftLinkSpec {
  double length = 0.15;
  double radius = 0.005;
  double youngs_modulus = 0.8e6;
  double shear_modulus = 0.8e6 / 3.0;
  double density = 1100.0;
  /// Polynomial order per strain component (torsion, bend-y, bend-z).
  std::array<int, 3> basis_order = {1, 1, 1};
  /// Reference strain (pre-curvature); linear part is the rod axis.
  Twist reference_strain = make_twist(Vec3::Zero(), Vec3::UnitX());
  Pose attach;
  int quadrature_points = 10;
  int magnus_substeps = 1;  // Magnus steps between consecutive quadrature nodes

  int dof_count() const { return basis_order[0] + basis_order[1] + basis_order[2] + 3; }
  double area() const { return M_PI * radius * radius; }
  double second_moment() const { return 0.25 * M_PI * std::pow(radius, 4); }
  double polar_moment() const { return 0.5 * M_PI * std::pow(radius, 4); }

  /// Per-length inertia in the section frame about the centreline.
  Mat6 inertia_density() const {
    Vec6 d;
    d << polar_moment(), second_moment(), second_moment(), area(), area(), area();
    return density * d.asDiagonal();
  }

  /// Per-length stiffness (GJ, EI, EI) on the angular strains.
  Mat6 stiffness_density() const {
    Vec6 d;
    d << shear_modulus * polar_moment(), youngs_modulus * second_moment(),
        youngs_modulus * second_moment(), 0.0, 0.0, 0.0;
    return d.asDiagonal();
  }

  /// Strain basis Phi(X): 6 x dof_count, rows 3..5 identically zero.
  Eigen::Matrix<double, 6, Eigen::Dynamic> basis(double x) const {
    Eigen::Matrix<double, 6, Eigen::Dynamic> phi =
        Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, dof_count());
    const double s = 2.0 * x / length - 1.0;
    int col = 0;
    for (int c = 0; c < 3; ++c) {
      double p_prev = 1.0, p = s;
      for (int n = 0; n <= basis_order[static_cast<std::size_t>(c)]; ++n) {
        double value;
        if (n == 0) {
          value = 1.0;
        } else if (n == 1) {
          value = s;
        } else {
          const double next = ((2.0 * n - 1.0) * s * p - (n - 1.0) * p_prev) / n;
          p_prev = p;
          p = next;
          value = next;
        }
        phi(c, col++) = value;
      }
    }
    return phi;
  }

  template <class Derived>
  Twist strain(double x, const Eigen::MatrixBase<Derived>& q) const {
    return basis(x) * q + reference_strain;
  }
};

/// Upper bound on the number of coordinates between the root and any link;
/// lets per-section Jacobians live on the stack.
inline constexpr int kMaxPathDofs = 40;

struct Link {
  std::string name;
  int parent = -1;
  std::variant<RigidLinkSpec, SoftLinkSpec> body;
  int motor = 0;  // 1-based motor number for actuated shafts, else 0

  int dof_offset = 0;
  int dof_count = 0;
  /// Generalized coordinates on the path from the root to this link,
  /// ancestors first; the link's own coordinates come last.
  std::vector<int> path_dofs;

  bool is_soft() const { return std::holds_alternative<SoftLinkSpec>(body); }
  const RigidLinkSpec& rigid() const { return std::get<RigidLinkSpec>(body); }
  const SoftLinkSpec& soft() const { return std::get<SoftLinkSpec>(body); }
};

class Assembly {
 public:
  Assembly() = default;

  int add_rigid(std::string name, int parent, RigidLinkSpec spec, int motor = 0) {
    links_.push_back({std::move(name), parent, std::move(spec), motor, 0, 0, {}});
    return static_cast<int>(links_.size()) - 1;
  }
  int add_soft(std::string name, int parent, SoftLinkSpec spec) {
    links_.push_back({std::move(name), parent, std::move(spec), 0, 0, 0, {}});
    return static_cast<int>(links_.size()) - 1;
  }

  /// Validates the tree and builds the coordinate map. Shaft joints flagged
  /// with a motor number become prescribed coordinates.
  void finalize() {
    if (links_.empty()) throw std::invalid_argument("assembly has no links");
    num_dofs_ = 0;
    prescribed_.clear();
    motor_dof_.fill(-1);
    for (std::size_t i = 0; i < links_.size(); ++i) {
      Link& l = links_[i];
      const bool root = i == 0;
      if (root != (l.parent < 0)) throw std::invalid_argument("link '" + l.name + "': only the first link may be the root");
      if (!root && l.parent >= static_cast<int>(i)) throw std::invalid_argument("link '" + l.name + "': parent must precede child");
      if (!root && links_[static_cast<std::size_t>(l.parent)].is_soft())
        throw std::invalid_argument("link '" + l.name + "': soft links must be leaves");
      if (l.is_soft()) {
        if (root) throw std::invalid_argument("root link must be rigid");
        const auto& s = l.soft();
        if (!(s.length > 0.0) || !(s.radius > 0.0)) throw std::invalid_argument("link '" + l.name + "': length and radius must be positive");
        if (!(s.youngs_modulus > 0.0) || !(s.shear_modulus > 0.0)) throw std::invalid_argument("link '" + l.name + "': moduli must be positive");
        if (!(s.density >= 0.0)) throw std::invalid_argument("link '" + l.name + "': density must be non-negative");
        for (int o : s.basis_order)
          if (o < 0) throw std::invalid_argument("link '" + l.name + "': negative basis order");
        if (s.quadrature_points < 1 || s.magnus_substeps < 1) throw std::invalid_argument("link '" + l.name + "': bad quadrature settings");
        l.dof_count = s.dof_count();
      } else {
        const auto& r = l.rigid();
        if (r.joint == JointKind::free6 && !root) throw std::invalid_argument("link '" + l.name + "': free joints are only allowed at the root");
        if (r.joint == JointKind::revolute && std::abs(r.joint_axis.norm() - 1.0) > 1e-9)
          throw std::invalid_argument("link '" + l.name + "': joint axis must be a unit vector");
        if (r.mass < 0.0 || r.volume < 0.0) throw std::invalid_argument("link '" + l.name + "': negative mass or volume");
        l.dof_count = r.joint == JointKind::free6 ? 6 : (r.joint == JointKind::revolute ? 1 : 0);
      }
      l.dof_offset = num_dofs_;
      num_dofs_ += l.dof_count;
      l.path_dofs = root ? std::vector<int>{} : links_[static_cast<std::size_t>(l.parent)].path_dofs;
      for (int k = 0; k < l.dof_count; ++k) l.path_dofs.push_back(l.dof_offset + k);
      if (static_cast<int>(l.path_dofs.size()) > kMaxPathDofs)
        throw std::invalid_argument("link '" + l.name + "': more than " + std::to_string(kMaxPathDofs) +
                                    " coordinates on the path from the root");
      if (l.motor > 0) {
        if (l.is_soft() || l.rigid().joint != JointKind::revolute)
          throw std::invalid_argument("link '" + l.name + "': only revolute joints can be motors");
        if (l.motor > kNumFaces) throw std::invalid_argument("link '" + l.name + "': motor number out of range");
        if (motor_dof_[static_cast<std::size_t>(l.motor - 1)] >= 0) throw std::invalid_argument("duplicate motor " + std::to_string(l.motor));
        motor_dof_[static_cast<std::size_t>(l.motor - 1)] = l.dof_offset;
        prescribed_.push_back(l.dof_offset);
      }
    }
    is_prescribed_.assign(static_cast<std::size_t>(num_dofs_), false);
    for (int p : prescribed_) is_prescribed_[static_cast<std::size_t>(p)] = true;
    free_.clear();
    for (int k = 0; k < num_dofs_; ++k)
      if (!is_prescribed_[static_cast<std::size_t>(k)]) free_.push_back(k);
  }

  int num_links() const { return static_cast<int>(links_.size()); }
  int num_dofs() const { return num_dofs_; }
  const Link& link(int id) const {
    if (id < 0 || id >= num_links()) throw std::out_of_range("unknown link id " + std::to_string(id));
    return links_[static_cast<std::size_t>(id)];
  }
  const std::vector<Link>& links() const { return links_; }
  bool floating_base() const { return links_.front().rigid().joint == JointKind::free6; }

  const std::vector<int>& prescribed_dofs() const { return prescribed_; }
  const std::vector<int>& free_dofs() const { return free_; }
  bool is_prescribed(int dof) const { return is_prescribed_[static_cast<std::size_t>(dof)]; }
  /// Coordinate index of motor m (1-based), or -1 when that module is absent.
  int motor_dof(int motor) const { return motor_dof_[static_cast<std::size_t>(motor - 1)]; }

  int find_link(const std::string& name) const {
    for (int i = 0; i < num_links(); ++i)
      if (links_[static_cast<std::size_t>(i)].name == name) return i;
    return -1;
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& l : links_) m += l.is_soft() ? l.soft().density * l.soft().area() * l.soft().length : l.rigid().mass;
    return m;
  }
  double total_volume() const {
    double v = 0.0;
    for (const auto& l : links_) v += l.is_soft() ? l.soft().area() * l.soft().length : l.rigid().volume;
    return v;
  }

 private:
  std::vector<Link> links_;
  int num_dofs_ = 0;
  std::vector<int> prescribed_;
  std::vector<int> free_;
  std::vector<bool> is_prescribed_;
  std::array<int, kNumFaces> motor_dof_{};
};

/// Generalized state. For a floating base, q[0..5] are exponential
/// coordinates of the base relative to `base` (zero after normalization) and
/// qdot[0..5] is the base body twist.
struct GeneralizedState {
  Pose base;
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  static GeneralizedState zero(const Assembly& a, const Pose& base = Pose::identity()) {
    return {base, Eigen::VectorXd::Zero(a.num_dofs()), Eigen::VectorXd::Zero(a.num_dofs())};
  }

  Pose base_pose(const Assembly& a) const {
    if (!a.floating_base()) return a.link(0).rigid().attach;
    return base * exp_twist(q.head<6>());
  }

  /// Folds the base chart into `base` and resets q[0..5].
  void normalize(const Assembly& a) {
    if (!a.floating_base()) return;
    base = base * exp_twist(q.head<6>());
    reorthonormalize(base.R);
    q.head<6>().setZero();
  }
};

enum class RemovalMode { detach_flagellum, remove_module };

/// Geometry, mass and material description of the drone. Values not stated in
/// the main text of the source are assumptions (see `assumed_fields`).
struct ZodiaqParams {
  double edge_length = 0.10;
  double total_mass = 10.75;
  double shell_mass = 8.57;
  double d_cg = 0.035;
  double body_length = 0.30;
  double omega_max_rpm = 130.0;
  double water_density = 1000.0;
  /// Extra displaced volume expressed as mass of water (kg); 0 = neutral.
  double net_buoyancy_mass = 0.0;
  Mat3 shell_inertia = Vec3(0.075, 0.075, 0.065).asDiagonal();

  double shaft_length = 0.02;
  double shaft_radius = 0.003;
  double shaft_mass = 0.01;
  double hook_length = 0.02;
  double hook_radius = 0.004;
  double hook_mass = 0.004;
  double hook_bend = M_PI / 4.0;  // total bend of the pre-curved hook

  SoftLinkSpec flagellum;

  std::vector<int> removed;  // motor numbers whose flagellum/module is removed
  RemovalMode removal_mode = RemovalMode::detach_flagellum;

  double omega_max() const { return omega_max_rpm * 2.0 * M_PI / 60.0; }

  static std::vector<std::string> assumed_fields() {
    return {"shell_inertia", "shaft_length", "shaft_radius", "shaft_mass", "hook_length",
            "hook_radius", "hook_mass", "hook_bend", "flagellum.length", "flagellum.radius",
            "flagellum.youngs_modulus", "flagellum.shear_modulus", "flagellum.density"};
  }
};

struct ModuleLinks {
  int shaft = -1;
  int hook = -1;
  int flagellum = -1;
};

struct ZodiaqBuild {
  Assembly assembly;
  Dodecahedron shell;
  std::array<ModuleLinks, kNumFaces> modules;
  ZodiaqParams params;
};

namespace detail {

inline Pose hook_end_pose(const ZodiaqParams& p) {
  const double kappa = p.hook_bend / p.hook_length;
  return exp_twist(make_twist(Vec3(0.0, 0.0, kappa), Vec3::UnitX()), p.hook_length);
}

inline Vec3 hook_centroid(const ZodiaqParams& p) {
  const double k = p.hook_bend / p.hook_length;
  const double l = p.hook_length;
  if (std::abs(k) < 1e-12) return {0.5 * l, 0.0, 0.0};
  return {(1.0 - std::cos(k * l)) / (k * k * l), (l - std::sin(k * l) / k) / (k * l), 0.0};
}

inline Mat3 rod_inertia(double m, double r, double l) {
  return Vec3(0.5 * m * r * r, m * (3.0 * r * r + l * l) / 12.0, m * (3.0 * r * r + l * l) / 12.0).asDiagonal();
}

}  // namespace detail

inline void validate(const ZodiaqParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(p.edge_length, "edge_length");
  positive(p.total_mass, "total_mass");
  positive(p.shaft_length, "shaft_length");
  positive(p.hook_length, "hook_length");
  positive(p.water_density, "water_density");
  positive(p.flagellum.length, "flagellum.length");
  positive(p.flagellum.radius, "flagellum.radius");
  positive(p.flagellum.youngs_modulus, "flagellum.youngs_modulus");
  positive(p.flagellum.shear_modulus, "flagellum.shear_modulus");
  if (p.d_cg < 0.0) throw std::invalid_argument("d_cg must be non-negative");
  for (int m : p.removed)
    if (m < 1 || m > kNumFaces) throw std::invalid_argument("removed motor " + std::to_string(m) + " out of range");
}

/// Shell with twelve shaft/hook/flagellum modules: 37 links and 90
/// coordinates for the intact build.
///
/// Rotating parts (shaft, hook, flagellum) carry their own mass; the shell link
/// takes the remainder of the total mass, with its centre of mass placed so
/// that the intact build's centre of gravity sits d_cg below the geometric
/// centre. The shell volume is sized for neutral buoyancy of the intact build
/// (plus `net_buoyancy_mass`), with the build's centre of buoyancy at the
/// geometric centre.
inline ZodiaqBuild assemble_zodiaq(const ZodiaqParams& params) {
  validate(params);
  ZodiaqBuild b;
  b.params = params;
  b.shell = make_dodecahedron(params.edge_length);

  const SoftLinkSpec& fl = params.flagellum;
  const double flag_mass = fl.density * fl.area() * fl.length;
  const double flag_volume = fl.area() * fl.length;
  const double shaft_volume = M_PI * params.shaft_radius * params.shaft_radius * params.shaft_length;
  const double hook_volume = M_PI * params.hook_radius * params.hook_radius * params.hook_length;
  const Pose hook_end = detail::hook_end_pose(params);
  const Vec3 hook_com = detail::hook_centroid(params);

  // Intact-build mass moments of the modules at the reference configuration.
  double module_mass = 0.0;
  Vec3 module_moment = Vec3::Zero();
  double module_volume = 0.0;
  Vec3 module_volume_moment = Vec3::Zero();
  for (const Face& f : b.shell.faces) {
    const Pose shaft = f.mount;
    const Pose hook = shaft * Pose::translation(Vec3(params.shaft_length, 0.0, 0.0));
    const Pose rod = hook * hook_end;
    module_mass += params.shaft_mass + params.hook_mass + flag_mass;
    module_moment += params.shaft_mass * (shaft * Vec3(0.5 * params.shaft_length, 0.0, 0.0));
    module_moment += params.hook_mass * (hook * hook_com);
    module_moment += flag_mass * (rod * Vec3(0.5 * fl.length, 0.0, 0.0));
    module_volume += shaft_volume + hook_volume + flag_volume;
    module_volume_moment += shaft_volume * (shaft * Vec3(0.5 * params.shaft_length, 0.0, 0.0));
    module_volume_moment += hook_volume * (hook * hook_com);
    module_volume_moment += flag_volume * (rod * Vec3(0.5 * fl.length, 0.0, 0.0));
  }
  const double shell_link_mass = params.total_mass - module_mass;
  if (!(shell_link_mass > 0.0)) throw std::invalid_argument("module masses exceed total mass");
  const Vec3 shell_com = (params.total_mass * Vec3(0.0, 0.0, -params.d_cg) - module_moment) / shell_link_mass;
  const double shell_volume = (params.total_mass + params.net_buoyancy_mass) / params.water_density - module_volume;
  if (!(shell_volume > 0.0)) throw std::invalid_argument("non-positive shell volume");

  RigidLinkSpec shell;
  shell.joint = JointKind::free6;
  shell.mass = shell_link_mass;
  shell.center_of_mass = shell_com;
  shell.inertia_at_com = params.shell_inertia;
  shell.volume = shell_volume;
  // Whole-build centre of buoyancy at the geometric centre.
  shell.center_of_buoyancy = -module_volume_moment / shell_volume;
  b.assembly.add_rigid("shell", -1, shell);

  auto is_removed = [&](int m) {
    return std::find(params.removed.begin(), params.removed.end(), m) != params.removed.end();
  };

  for (int m = 1; m <= kNumFaces; ++m) {
    const bool removed = is_removed(m);
    if (removed && params.removal_mode == RemovalMode::remove_module) continue;
    const Face& f = b.shell.face(m);
    auto& mod = b.modules[static_cast<std::size_t>(m - 1)];

    RigidLinkSpec shaft;
    shaft.joint = JointKind::revolute;
    shaft.joint_axis = Vec3::UnitX();
    shaft.mass = params.shaft_mass;
    shaft.center_of_mass = Vec3(0.5 * params.shaft_length, 0.0, 0.0);
    shaft.inertia_at_com = detail::rod_inertia(params.shaft_mass, params.shaft_radius, params.shaft_length);
    shaft.volume = shaft_volume;
    shaft.center_of_buoyancy = shaft.center_of_mass;
    shaft.attach = f.mount;
    mod.shaft = b.assembly.add_rigid("shaft" + std::to_string(m), 0, shaft, m);

    RigidLinkSpec hook;
    hook.joint = JointKind::fixed;
    hook.mass = params.hook_mass;
    hook.center_of_mass = hook_com;
    hook.inertia_at_com = detail::rod_inertia(params.hook_mass, params.hook_radius, params.hook_length);
    hook.volume = hook_volume;
    hook.center_of_buoyancy = hook_com;
    hook.attach = Pose::translation(Vec3(params.shaft_length, 0.0, 0.0));
    mod.hook = b.assembly.add_rigid("hook" + std::to_string(m), mod.shaft, hook);

    if (!removed) {
      SoftLinkSpec rod = fl;
      rod.attach = hook_end;
      mod.flagellum = b.assembly.add_soft("flagellum" + std::to_string(m), mod.hook, rod);
    }
  }
  b.assembly.finalize();
  return b;
}

}  // namespace zodiaq
