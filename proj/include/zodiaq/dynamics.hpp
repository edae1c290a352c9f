#pragma once

// Generalized equations of motion of an Assembly with prescribed motor joints:
//
//   M(q) qdd = Q(q, qd, t),   Q = sum_p J_p^T (F_p + ad_eta^T M_p eta - M_p Jdot_p qd)
//                                 - K q - D qd
//
// where p runs over rigid link frames and rod quadrature nodes, M_p includes
// added mass and F_p collects gravity, buoyancy, drag, lift and applied loads.
// The equations are partitioned into free (f) and prescribed (p) coordinates:
//
//   M_ff qdd_f = Q_f - M_fp qdd_p

#include "zodiaq/hydro.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zodiaq {

/// World-aligned wrench (moment about the application point; force) applied
/// at a rigid link frame or at the tip of a soft link, active on [t_begin, t_end).
struct PointLoad {
  int link = 0;
  Wrench world_wrench = Wrench::Zero();
  double t_begin = -std::numeric_limits<double>::infinity();
  double t_end = std::numeric_limits<double>::infinity();

  bool active(double t) const { return t >= t_begin && t < t_end; }
};

/// Motion of the prescribed coordinates, in Assembly::prescribed_dofs() order.
struct PrescribedMotion {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd acceleration;
};

class SingularMassMatrix : public std::runtime_error {
 public:
  SingularMassMatrix(const std::string& what, double min_eig, double max_eig)
      : std::runtime_error(what), min_eigenvalue(min_eig), max_eigenvalue(max_eig) {}
  double min_eigenvalue;
  double max_eigenvalue;
};

struct EnergyTerms {
  double kinetic = 0.0;
  double elastic = 0.0;
  double potential = 0.0;  // gravity and buoyancy, datum z = 0
  double total() const { return kinetic + elastic + potential; }
};

struct DynamicsTerms {
  Eigen::MatrixXd M;
  Eigen::VectorXd Q;
};

class TwinModel {
 public:
  TwinModel(const Assembly& a, HydroParams hydro, double damping_beta = 0.05, std::vector<PointLoad> loads = {})
      : asm_(&a), kin_(a), hydro_(std::move(hydro)), beta_(damping_beta), loads_(std::move(loads)) {
    const int n = a.num_dofs();
    K_ = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      if (!l.is_soft()) continue;
      const SoftLinkSpec& s = l.soft();
      // Exact for the polynomial basis: (order_max * 2) <= 2 * quad - 1.
      const QuadratureRule rule = gauss_legendre(std::max(s.quadrature_points, 8), 0.0, s.length);
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(l.dof_count, l.dof_count);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const Matrix6X phi = s.basis(rule.nodes[j]);
        k += rule.weights[j] * (phi.transpose() * s.stiffness_density() * phi);
      }
      K_.block(l.dof_offset, l.dof_offset, l.dof_count, l.dof_count) = k;
    }
    D_ = beta_ * K_;
  }

  const Assembly& assembly() const { return *asm_; }
  const KinematicModel& kinematics() const { return kin_; }
  const HydroParams& hydro() const { return hydro_; }
  HydroParams& hydro() { return hydro_; }
  const Eigen::MatrixXd& stiffness() const { return K_; }
  const Eigen::MatrixXd& damping() const { return D_; }
  double damping_beta() const { return beta_; }
  std::vector<PointLoad>& loads() { return loads_; }

  /// Inertia of a rigid link frame including shell added mass.
  Mat6 link_inertia(int id) const {
    Mat6 m = asm_->link(id).rigid().body_inertia();
    if (id == 0 && asm_->floating_base()) m += hydro_.shell_added_mass;
    return m;
  }

  Mat6 rod_inertia(int id) const {
    const SoftLinkSpec& s = asm_->link(id).soft();
    return s.inertia_density() + rod_added_mass_density(s, hydro_);
  }

  /// External (environment + applied) wrench on a rigid link frame.
  Wrench link_load(int id, const SectionFrame& f, double t) const {
    const RigidLinkSpec& r = asm_->link(id).rigid();
    Wrench w = (id == 0 && asm_->floating_base()) ? shell_load(f.g, f.eta, buoyancy_of(r), hydro_)
                                                  : hydrostatic_wrench(f.g, buoyancy_of(r), hydro_);
    return w + applied(id, f, t);
  }

  /// Mass matrix and generalized forces. `internal` adds -K q - D qd.
  void evaluate(const GeneralizedState& st, double t, DynamicsTerms& out, bool internal = true) const {
    const Assembly& a = *asm_;
    const int n = a.num_dofs();
    kin_.sweep(st, sweep_);
    out.M.setZero(n, n);
    out.Q.setZero(n);
    LocalMatrix m_loc;
    LocalVector q_loc;
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      const auto& path = l.path_dofs;
      const auto np = static_cast<Eigen::Index>(path.size());
      if (np == 0) continue;
      m_loc.setZero(np, np);
      q_loc.setZero(np);
      if (!l.is_soft()) {
        const SectionFrame& f = sweep_.link[static_cast<std::size_t>(i)];
        accumulate(f, link_inertia(i), link_load(i, f, t), 1.0, m_loc, q_loc);
      } else {
        const SoftLinkSpec& s = l.soft();
        const Mat6 mi = rod_inertia(i);
        const auto& grid = kin_.grid(i);
        const auto& nodes = sweep_.rod[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          if (grid.weight[k] == 0.0) continue;
          accumulate(nodes[k], mi, rod_load_density(nodes[k].g, nodes[k].eta, s, hydro_), grid.weight[k], m_loc, q_loc);
        }
        const SectionFrame& tip = nodes.back();
        const Wrench w = applied(i, tip, t);
        if (!w.isZero(0.0)) q_loc.noalias() += tip.J.transpose() * w;
      }
      for (Eigen::Index c = 0; c < np; ++c) {
        const int gc = path[static_cast<std::size_t>(c)];
        out.Q[gc] += q_loc[c];
        for (Eigen::Index r = 0; r < np; ++r) out.M(path[static_cast<std::size_t>(r)], gc) += m_loc(r, c);
      }
    }
    if (internal) out.Q.noalias() -= K_ * st.q + D_ * st.qdot;
  }

  /// Free-coordinate accelerations; prescribed coordinates of `st` must
  /// already hold the motor positions/velocities. Optionally returns the
  /// generalized reaction forces on the prescribed coordinates.
  Eigen::VectorXd generalized_accel(const GeneralizedState& st, double t, const Eigen::VectorXd& prescribed_accel,
                                    Eigen::VectorXd* reaction = nullptr) const {
    evaluate(st, t, terms_);
    return solve_partitioned(terms_, prescribed_accel, reaction);
  }

  Eigen::VectorXd solve_partitioned(const DynamicsTerms& terms, const Eigen::VectorXd& prescribed_accel,
                                    Eigen::VectorXd* reaction = nullptr) const {
    const auto& f = asm_->free_dofs();
    const auto& p = asm_->prescribed_dofs();
    Eigen::VectorXd rhs = terms.Q(f);
    if (!p.empty()) rhs.noalias() -= terms.M(f, p) * prescribed_accel;
    const Eigen::MatrixXd mff = terms.M(f, f);
    Eigen::LLT<Eigen::MatrixXd> llt(mff);
    if (llt.info() != Eigen::Success) throw singular(mff);
    Eigen::VectorXd qdd_f = llt.solve(rhs);
    if (reaction && !p.empty()) {
      *reaction = terms.M(p, f) * qdd_f + terms.M(p, p) * prescribed_accel - terms.Q(p);
    }
    return qdd_f;
  }

  EnergyTerms energy(const GeneralizedState& st) const {
    const Assembly& a = *asm_;
    kin_.sweep(st, sweep_);
    EnergyTerms e;
    const double g = hydro_.gravity;
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      if (!l.is_soft()) {
        const SectionFrame& f = sweep_.link[static_cast<std::size_t>(i)];
        const RigidLinkSpec& r = l.rigid();
        e.kinetic += 0.5 * f.eta.dot(link_inertia(i) * f.eta);
        e.potential += g * (r.mass * (f.g * r.center_of_mass).z() -
                            hydro_.water_density * r.volume * (f.g * r.center_of_buoyancy).z());
        continue;
      }
      const SoftLinkSpec& s = l.soft();
      const Mat6 mi = rod_inertia(i);
      const auto& grid = kin_.grid(i);
      const auto& nodes = sweep_.rod[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double w = grid.weight[k];
        if (w == 0.0) continue;
        e.kinetic += 0.5 * w * nodes[k].eta.dot(mi * nodes[k].eta);
        e.potential += w * g * (s.density - hydro_.water_density) * s.area() * nodes[k].g.p.z();
      }
    }
    e.elastic = 0.5 * st.q.dot(K_ * st.q);
    return e;
  }

  /// Total linear momentum in world coordinates (including added mass).
  Vec3 linear_momentum(const GeneralizedState& st) const {
    const Assembly& a = *asm_;
    kin_.sweep(st, sweep_);
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < a.num_links(); ++i) {
      const Link& l = a.link(i);
      if (!l.is_soft()) {
        const SectionFrame& f = sweep_.link[static_cast<std::size_t>(i)];
        p += f.g.R * (link_inertia(i) * f.eta).tail<3>();
        continue;
      }
      const Mat6 mi = rod_inertia(i);
      const auto& grid = kin_.grid(i);
      const auto& nodes = sweep_.rod[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < nodes.size(); ++k)
        if (grid.weight[k] != 0.0) p += grid.weight[k] * (nodes[k].g.R * (mi * nodes[k].eta).tail<3>());
    }
    return p;
  }

  /// Mass matrix alone (includes added mass).
  Eigen::MatrixXd mass_matrix(const GeneralizedState& st) const {
    evaluate(st, 0.0, terms_);
    return terms_.M;
  }

 private:
  Wrench applied(int id, const SectionFrame& f, double t) const {
    Wrench w = Wrench::Zero();
    for (const PointLoad& pl : loads_) {
      if (pl.link != id || !pl.active(t)) continue;
      const Mat3 rt = f.g.R.transpose();
      w.head<3>() += rt * pl.world_wrench.head<3>();
      w.tail<3>() += rt * pl.world_wrench.tail<3>();
    }
    return w;
  }

  using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxPathDofs, kMaxPathDofs>;
  using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPathDofs, 1>;

  static void accumulate(const SectionFrame& f, const Mat6& mi, const Wrench& load, double weight, LocalMatrix& m,
                         LocalVector& q) {
    const Matrix6X mj = weight * mi.lazyProduct(f.J);
    m.noalias() += f.J.transpose().lazyProduct(mj);
    const Wrench force = load + ad_transpose_apply(f.eta, mi * f.eta) - mi * f.bias;
    q.noalias() += weight * (f.J.transpose() * force);
  }

  static SingularMassMatrix singular(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    std::ostringstream os;
    os << "mass matrix is not positive definite (min eigenvalue " << lo << ", max " << hi << ")";
    return SingularMassMatrix(os.str(), lo, hi);
  }

  const Assembly* asm_;
  KinematicModel kin_;
  HydroParams hydro_;
  double beta_;
  std::vector<PointLoad> loads_;
  Eigen::MatrixXd K_, D_;
  mutable KinematicModel::Sweep sweep_;
  mutable DynamicsTerms terms_;
};

/// Newton solve of Q_k(q) = 0 for the listed coordinates k (velocities zero),
/// with a finite-difference Jacobian. Returns the final residual norm.
inline double static_equilibrium(const TwinModel& model, GeneralizedState& st, const std::vector<int>& unknowns,
                                 double tol = 1e-12, int max_iter = 50) {
  st.qdot.setZero();
  DynamicsTerms terms;
  auto residual = [&](const GeneralizedState& s) {
    model.evaluate(s, 0.0, terms);
    return Eigen::VectorXd(terms.Q(unknowns));
  };
  const int m = static_cast<int>(unknowns.size());
  Eigen::VectorXd r = residual(st);
  for (int it = 0; it < max_iter && r.norm() > tol; ++it) {
    Eigen::MatrixXd jac(m, m);
    for (int j = 0; j < m; ++j) {
      const double h = 1e-6;
      GeneralizedState sp = st, sm = st;
      sp.q[unknowns[static_cast<std::size_t>(j)]] += h;
      sm.q[unknowns[static_cast<std::size_t>(j)]] -= h;
      jac.col(j) = (residual(sp) - residual(sm)) / (2.0 * h);
    }
    const Eigen::VectorXd dx = jac.fullPivLu().solve(-r);
    for (int j = 0; j < m; ++j) st.q[unknowns[static_cast<std::size_t>(j)]] += dx[j];
    r = residual(st);
  }
  return r.norm();
}

}  // namespace zodiaq
