#pragma once

// Geometric-variable-strain kinematics of an Assembly: poses, body twists,
// body Jacobians and their time derivatives, evaluated by one recursive sweep
// from the root to every rigid link frame and every rod node.

#include "zodiaq/assembly.hpp"
#include "zodiaq/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace zodiaq {

using Matrix6X = Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, kMaxPathDofs>;

/// Kinematic state of one body frame. Jacobian columns follow the owning
/// link's `path_dofs`.
struct SectionFrame {
  Pose g;
  Twist eta = Twist::Zero();   // body twist
  Twist bias = Twist::Zero();  // Jdot * qdot
  Matrix6X J;
  Matrix6X Jdot;  // filled only on request
};

struct KinematicOptions {
  bool with_jdot = false;
};

class KinematicModel {
 public:
  /// Magnus segment between two rod nodes; the basis at its Gauss points is
  /// configuration independent and cached.
  struct RodSegment {
    double h = 0.0;
    Matrix6X b1, b2;
  };
  struct RodGrid {
    std::vector<double> x;       // node arclengths: 0, quadrature nodes, length
    std::vector<double> weight;  // quadrature weight (0 at base and tip)
    std::vector<std::vector<RodSegment>> segments;  // segments[i]: node i -> i+1
  };

  struct Sweep {
    std::vector<SectionFrame> link;              // link frame (rod base for soft links)
    std::vector<std::vector<SectionFrame>> rod;  // per node, soft links only
  };

  explicit KinematicModel(const Assembly& a) : asm_(&a), grids_(static_cast<std::size_t>(a.num_links())) {
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      if (!l.is_soft()) continue;
      const SoftLinkSpec& s = l.soft();
      RodGrid& grid = grids_[static_cast<std::size_t>(i)];
      const QuadratureRule rule = gauss_legendre(s.quadrature_points, 0.0, s.length);
      grid.x.push_back(0.0);
      grid.weight.push_back(0.0);
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        grid.x.push_back(rule.nodes[k]);
        grid.weight.push_back(rule.weights[k]);
      }
      grid.x.push_back(s.length);
      grid.weight.push_back(0.0);
      for (std::size_t k = 0; k + 1 < grid.x.size(); ++k)
        grid.segments.push_back(make_segments(s, grid.x[k], grid.x[k + 1], s.magnus_substeps));
    }
  }

  const Assembly& assembly() const { return *asm_; }
  const RodGrid& grid(int link) const { return grids_[static_cast<std::size_t>(link)]; }

  void sweep(const GeneralizedState& st, Sweep& out, KinematicOptions opt = {}) const {
    const Assembly& a = *asm_;
    out.link.resize(static_cast<std::size_t>(a.num_links()));
    out.rod.resize(static_cast<std::size_t>(a.num_links()));
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      SectionFrame& f = out.link[static_cast<std::size_t>(i)];
      if (i == 0) {
        root_frame(st, f, opt);
        continue;
      }
      const SectionFrame& parent = out.link[static_cast<std::size_t>(l.parent)];
      if (!l.is_soft()) {
        rigid_child(parent, l, st, f, opt);
        continue;
      }
      soft_base(parent, l, f, opt);
      const RodGrid& grid = grids_[static_cast<std::size_t>(i)];
      auto& nodes = out.rod[static_cast<std::size_t>(i)];
      nodes.resize(grid.x.size());
      nodes[0] = f;
      const auto q = st.q.segment(l.dof_offset, l.dof_count);
      const auto qd = st.qdot.segment(l.dof_offset, l.dof_count);
      for (std::size_t k = 0; k + 1 < grid.x.size(); ++k) {
        nodes[k + 1] = nodes[k];
        for (const RodSegment& seg : grid.segments[k]) rod_step(l.soft(), seg, q, qd, nodes[k + 1], opt);
      }
    }
  }

  /// Frame of link `id` at arclength x (ignored for rigid links).
  SectionFrame section(const GeneralizedState& st, int id, double x, KinematicOptions opt = {}) const {
    const Assembly& a = *asm_;
    const Link& l = a.link(id);
    // Chain of ancestors, root first.
    std::vector<int> chain;
    for (int k = id; k >= 0; k = a.link(k).parent) chain.push_back(k);
    SectionFrame f;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const Link& c = a.link(*it);
      if (*it == 0) {
        root_frame(st, f, opt);
      } else if (c.is_soft()) {
        SectionFrame parent = f;
        soft_base(parent, c, f, opt);
      } else {
        SectionFrame parent = f;
        rigid_child(parent, c, st, f, opt);
      }
    }
    if (!l.is_soft()) return f;
    const SoftLinkSpec& s = l.soft();
    if (x < 0.0 || x > s.length * (1.0 + 1e-12)) throw std::out_of_range("arclength outside the rod");
    const int steps = std::max(1, static_cast<int>(std::ceil(x / s.length * (s.quadrature_points + 1) * s.magnus_substeps)));
    const auto q = st.q.segment(l.dof_offset, l.dof_count);
    const auto qd = st.qdot.segment(l.dof_offset, l.dof_count);
    if (x > 0.0)
      for (const RodSegment& seg : make_segments(s, 0.0, x, steps)) rod_step(s, seg, q, qd, f, opt);
    return f;
  }

  /// Strain twist of a soft link at arclength x.
  Twist strain(const GeneralizedState& st, int id, double x) const {
    const Link& l = asm_->link(id);
    return l.soft().strain(x, st.q.segment(l.dof_offset, l.dof_count));
  }

 private:
  static std::vector<RodSegment> make_segments(const SoftLinkSpec& s, double x0, double x1, int n) {
    std::vector<RodSegment> out;
    const double h = (x1 - x0) / n;
    for (int k = 0; k < n; ++k) {
      const double xa = x0 + k * h;
      out.push_back({h, s.basis(xa + kMagnusNode1 * h), s.basis(xa + kMagnusNode2 * h)});
    }
    return out;
  }

  void root_frame(const GeneralizedState& st, SectionFrame& f, const KinematicOptions& opt) const {
    const Assembly& a = *asm_;
    if (a.floating_base()) {
      f.g = st.base * exp_twist(st.q.head<6>());
      f.J = Matrix6X::Identity(6, 6);
      f.eta = st.qdot.head<6>();
      if (opt.with_jdot) f.Jdot = Matrix6X::Zero(6, 6);
    } else {
      f.g = a.link(0).rigid().attach;
      f.J.resize(6, 0);
      f.eta.setZero();
      if (opt.with_jdot) f.Jdot.resize(6, 0);
    }
    f.bias.setZero();
  }

  static void rigid_child(const SectionFrame& p, const Link& l, const GeneralizedState& st, SectionFrame& f,
                          const KinematicOptions& opt) {
    const RigidLinkSpec& r = l.rigid();
    Pose rel = r.attach;
    Twist screw = Twist::Zero();
    Twist eta_r = Twist::Zero();
    if (r.joint == JointKind::revolute) {
      screw.head<3>() = r.joint_axis;
      const double th = st.q[l.dof_offset];
      rel = rel * exp_twist(screw, th);
      eta_r = screw * st.qdot[l.dof_offset];
    }
    const Mat6 adi = adjoint_inv(rel);
    const Twist eta_in = adi * p.eta;
    const int np = static_cast<int>(p.J.cols());
    f.g = p.g * rel;
    f.J.resize(6, np + l.dof_count);
    f.J.leftCols(np).noalias() = adi.lazyProduct(p.J);
    if (l.dof_count == 1) f.J.col(np) = screw;
    f.eta = eta_in + eta_r;
    f.bias = adi * p.bias - ad_apply(eta_r, eta_in);
    if (opt.with_jdot) {
      f.Jdot.resize(6, np + l.dof_count);
      f.Jdot.leftCols(np).noalias() = adi.lazyProduct(p.Jdot) - ad(eta_r).lazyProduct(f.J.leftCols(np));
      if (l.dof_count == 1) f.Jdot.col(np).setZero();
    }
  }

  static void soft_base(const SectionFrame& p, const Link& l, SectionFrame& f, const KinematicOptions& opt) {
    const Pose& rel = l.soft().attach;
    const Mat6 adi = adjoint_inv(rel);
    const int np = static_cast<int>(p.J.cols());
    f.g = p.g * rel;
    f.J.setZero(6, np + l.dof_count);
    f.J.leftCols(np).noalias() = adi.lazyProduct(p.J);
    f.eta = adi * p.eta;
    f.bias = adi * p.bias;
    if (opt.with_jdot) {
      f.Jdot.setZero(6, np + l.dof_count);
      f.Jdot.leftCols(np).noalias() = adi.lazyProduct(p.Jdot);
    }
  }

  template <class Q, class QD>
  static void rod_step(const SoftLinkSpec& s, const RodSegment& seg, const Q& q, const QD& qd, SectionFrame& f,
                       const KinematicOptions& opt) {
    static const double kC = std::sqrt(3.0) / 12.0;
    const double h = seg.h;
    const Twist xi1 = seg.b1 * q + s.reference_strain;
    const Twist xi2 = seg.b2 * q + s.reference_strain;
    const Twist xid1 = seg.b1 * qd;
    const Twist xid2 = seg.b2 * qd;
    const Twist omega = magnus_omega(xi1, xi2, h);

    const int n = static_cast<int>(seg.b1.cols());
    Matrix6X S = (0.5 * h) * (seg.b1 + seg.b2);
    S.noalias() += (kC * h * h) * (ad(xi1).lazyProduct(seg.b2) - ad(xi2).lazyProduct(seg.b1));
    const Twist omega_dot = S * qd;
    const Twist sdot_qd = (2.0 * kC * h * h) * ad_apply(xid1, xid2);

    const Pose e = exp_twist(omega);
    const Mat6 adi = adjoint_inv(e);
    const Mat6 T = tangent_op(omega);
    const Matrix6X TS = T.lazyProduct(S);
    const Twist eta_r = TS * qd;
    const Twist eta_in = adi * f.eta;

    f.g = f.g * e;
    if (opt.with_jdot) {
      Matrix6X jd = adi.lazyProduct(f.Jdot);
      const Matrix6X adj = adi.lazyProduct(f.J);
      jd.noalias() -= ad(eta_r).lazyProduct(adj);
      const Matrix6X Sd = (kC * h * h) * (ad(xid1).lazyProduct(seg.b2) - ad(xid2).lazyProduct(seg.b1));
      Matrix6X tail = T.lazyProduct(Sd);
      for (int k = 0; k < n; ++k) tail.col(k) += tangent_dot_apply(omega, omega_dot, S.col(k));
      jd.rightCols(n) += tail;
      f.Jdot = std::move(jd);
    }
    Matrix6X j = adi.lazyProduct(f.J);
    j.rightCols(n) += TS;
    f.J = j;
    f.bias = adi * f.bias - ad_apply(eta_r, eta_in) + tangent_dot_apply(omega, omega_dot, omega_dot) + T * sdot_qd;
    f.eta = eta_in + eta_r;
  }

  const Assembly* asm_;
  std::vector<RodGrid> grids_;
};

/// Pose and body twist of a cross-section (link frame for rigid links).
struct SectionKinematics {
  Pose pose;
  Twist twist;
};

inline SectionKinematics forward_kinematics(const Assembly& a, const GeneralizedState& st, int link, double x = 0.0) {
  const KinematicModel km(a);
  const SectionFrame f = km.section(st, link, x);
  return {f.g, f.eta};
}

struct JacobianResult {
  Eigen::MatrixXd J;     // 6 x num_dofs
  Eigen::MatrixXd Jdot;  // 6 x num_dofs
};

/// Body Jacobian mapping qdot to the section body twist, and its time
/// derivative along qdot.
inline JacobianResult jacobian(const Assembly& a, const GeneralizedState& st, int link, double x = 0.0) {
  const KinematicModel km(a);
  const SectionFrame f = km.section(st, link, x, {true});
  JacobianResult r{Eigen::MatrixXd::Zero(6, a.num_dofs()), Eigen::MatrixXd::Zero(6, a.num_dofs())};
  const auto& path = a.link(link).path_dofs;
  for (std::size_t c = 0; c < path.size(); ++c) {
    r.J.col(path[c]) = f.J.col(static_cast<Eigen::Index>(c));
    r.Jdot.col(path[c]) = f.Jdot.col(static_cast<Eigen::Index>(c));
  }
  return r;
}

}  // namespace zodiaq
