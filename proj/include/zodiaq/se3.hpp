#pragma once

// SE(3) kernel: screw algebra, exponential/log maps, adjoints, the tangent
// operator of the exponential and the fourth-order Magnus exponential of a
// spatially varying strain field.
//
// Screw 6-vectors are ordered (angular; linear) throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace zodiaq {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;

/// Body twist (rad/s; m/s) or strain twist (rad/m; dimensionless).
using Twist = Vec6;
/// Body wrench (N m; N).
using Wrench = Vec6;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

inline Vec6 make_twist(const Vec3& angular, const Vec3& linear) {
  Vec6 t;
  t << angular, linear;
  return t;
}

/// Rigid transform (R, p) acting as x -> R x + p.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  Pose operator*(const Pose& o) const { return {R * o.R, R * o.p + p}; }
  Vec3 operator*(const Vec3& x) const { return R * x + p; }
  Pose inverse() const {
    const Mat3 rt = R.transpose();
    return {rt, -(rt * p)};
  }
  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = p;
    return m;
  }
};

// Small-angle threshold for the Rodrigues coefficients.
inline constexpr double kSmallAngle = 1e-6;

/// exp of the screw scale*xi (Rodrigues form).
inline Pose exp_twist(const Twist& xi, double scale = 1.0) {
  const Vec3 w = scale * xi.head<3>();
  const Vec3 v = scale * xi.tail<3>();
  const double th2 = w.squaredNorm();
  const double th = std::sqrt(th2);
  double a, b, c;  // sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3
  if (th < kSmallAngle) {
    a = 1.0 - th2 / 6.0;
    b = 0.5 - th2 / 24.0;
    c = 1.0 / 6.0 - th2 / 120.0;
  } else {
    const double sh = std::sin(0.5 * th) / (0.5 * th);
    a = std::sin(th) / th;
    b = 0.5 * sh * sh;
    // th - sin(th) cancels badly for small th.
    c = th < 1e-2 ? 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0 - th2 * th2 * th2 / 362880.0
                  : (th - std::sin(th)) / (th2 * th);
  }
  const Mat3 W = skew(w);
  const Mat3 W2 = W * W;
  Pose g;
  g.R = Mat3::Identity() + a * W + b * W2;
  g.p = (Mat3::Identity() + b * W + c * W2) * v;
  return g;
}

/// Principal logarithm; valid for rotation angles below pi.
inline Twist log_pose(const Pose& g) {
  const double cos_th = std::clamp((g.R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Vec3 vee(g.R(2, 1) - g.R(1, 2), g.R(0, 2) - g.R(2, 0), g.R(1, 0) - g.R(0, 1));
  const double th = std::atan2(0.5 * vee.norm(), cos_th);
  Vec3 w;
  double d;  // coefficient of W^2 in the inverse left Jacobian
  if (th < kSmallAngle) {
    w = 0.5 * (1.0 + th * th / 6.0) * vee;
    d = 1.0 / 12.0 + th * th / 720.0;
  } else {
    w = th / (2.0 * std::sin(th)) * vee;
    const double t2 = th * th;
    d = th < 1e-2 ? 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
                  : (1.0 - th * std::sin(th) / (2.0 * (1.0 - std::cos(th)))) / t2;
  }
  const Mat3 W = skew(w);
  const Vec3 v = (Mat3::Identity() - 0.5 * W + d * W * W) * g.p;
  return make_twist(w, v);
}

/// Ad_g: maps twists expressed in the frame of g to its parent frame.
inline Mat6 adjoint(const Pose& g) {
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = g.R;
  a.bottomRightCorner<3, 3>() = g.R;
  a.bottomLeftCorner<3, 3>() = skew(g.p) * g.R;
  return a;
}

/// Ad_{g^-1} without forming the inverse pose.
inline Mat6 adjoint_inv(const Pose& g) {
  const Mat3 rt = g.R.transpose();
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = rt;
  a.bottomRightCorner<3, 3>() = rt;
  a.bottomLeftCorner<3, 3>() = -rt * skew(g.p);
  return a;
}

inline Vec6 adjoint_inv_apply(const Pose& g, const Vec6& x) {
  const Mat3 rt = g.R.transpose();
  const Vec3 w = x.head<3>();
  return make_twist(rt * w, rt * (x.tail<3>() - g.p.cross(w)));
}

/// Small adjoint ad_xi (Lie bracket matrix).
inline Mat6 ad(const Vec6& xi) {
  Mat6 a = Mat6::Zero();
  const Mat3 W = skew(xi.head<3>());
  a.topLeftCorner<3, 3>() = W;
  a.bottomRightCorner<3, 3>() = W;
  a.bottomLeftCorner<3, 3>() = skew(xi.tail<3>());
  return a;
}

/// ad_xi * y computed with cross products.
inline Vec6 ad_apply(const Vec6& xi, const Vec6& y) {
  const Vec3 w = xi.head<3>();
  const Vec3 v = xi.tail<3>();
  const Vec3 yw = y.head<3>();
  return make_twist(w.cross(yw), v.cross(yw) + w.cross(y.tail<3>()));
}

/// ad_xi^T * mu (dual action on a momentum/wrench).
inline Vec6 ad_transpose_apply(const Vec6& xi, const Vec6& mu) {
  const Vec3 w = xi.head<3>();
  const Vec3 v = xi.tail<3>();
  const Vec3 m = mu.head<3>();
  const Vec3 f = mu.tail<3>();
  return make_twist(-w.cross(m) - v.cross(f), -w.cross(f));
}

namespace detail {

// Coefficients of dexp_Omega = I + a1 ad + a2 ad^2 + a3 ad^3 + a4 ad^4, and
// b_i = a_i'(t) / t for the time derivative.
struct TangentCoeffs {
  double a1, a2, a3, a4;
  double b1, b2, b3, b4;
};

inline TangentCoeffs tangent_coeffs(double th) {
  TangentCoeffs k;
  const double t2 = th * th;
  if (th < 0.2) {
    const double t4 = t2 * t2;
    const double t6 = t4 * t2;
    k.a1 = 0.5 - t4 / 720.0 + t6 / 20160.0;
    k.a2 = 1.0 / 6.0 - t4 / 5040.0 + t6 / 181440.0;
    k.a3 = 1.0 / 24.0 - t2 / 360.0 + t4 / 13440.0 - t6 / 907200.0;
    k.a4 = 1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0 - t6 / 9979200.0;
    k.b1 = -t2 / 180.0 + t4 / 3360.0 - t6 / 151200.0;
    k.b2 = -t2 / 1260.0 + t4 / 30240.0 - t6 / 1663200.0;
    k.b3 = -1.0 / 180.0 + t2 / 3360.0 - t4 / 151200.0 + t6 / 11975040.0;
    k.b4 = -1.0 / 1260.0 + t2 / 30240.0 - t4 / 1663200.0 + t6 / 155675520.0;
    return k;
  }
  const double s = std::sin(th);
  const double c = std::cos(th);
  const double t3 = t2 * th;
  const double t4 = t2 * t2;
  const double t5 = t4 * th;
  const double t7 = t4 * t3;
  k.a1 = (4.0 - 4.0 * c - th * s) / (2.0 * t2);
  k.a2 = (4.0 * th - 5.0 * s + th * c) / (2.0 * t3);
  k.a3 = (2.0 - 2.0 * c - th * s) / (2.0 * t4);
  k.a4 = (2.0 * th - 3.0 * s + th * c) / (2.0 * t5);
  // Quotient rule on the closed forms, divided once more by t.
  k.b1 = ((3.0 * s - th * c) * t2 - 2.0 * th * (4.0 - 4.0 * c - th * s)) / (2.0 * t4 * th);
  k.b2 = ((4.0 - 4.0 * c - th * s) * t3 - 3.0 * t2 * (4.0 * th - 5.0 * s + th * c)) / (2.0 * t7);
  k.b3 = ((s - th * c) * t4 - 4.0 * t3 * (2.0 - 2.0 * c - th * s)) / (2.0 * t4 * t4 * th);
  k.b4 = ((2.0 - 2.0 * c - th * s) * t5 - 5.0 * t4 * (2.0 * th - 3.0 * s + th * c)) /
         (2.0 * t5 * t5 * th);
  return k;
}

}  // namespace detail

/// Tangent operator T(Omega) = sum_k (-ad_Omega)^k / (k+1)!, so that the body
/// velocity of exp(Omega(t)) is T(Omega) * dOmega/dt.
inline Mat6 tangent_op(const Vec6& omega) {
  const auto k = detail::tangent_coeffs(omega.head<3>().norm());
  // ad^n = [[W^n, 0], [L_n, W^n]] with L_n = L_{n-1} W + W^{n-1} V.
  const Mat3 W = skew(omega.head<3>());
  const Mat3 V = skew(omega.tail<3>());
  const Mat3 W2 = W * W;
  const Mat3 W3 = W2 * W;
  const Mat3 L2 = V * W + W * V;
  const Mat3 L3 = L2 * W + W2 * V;
  const Mat3 L4 = L3 * W + W3 * V;
  Mat6 t;
  t.topLeftCorner<3, 3>() = Mat3::Identity() - k.a1 * W + k.a2 * W2 - k.a3 * W3 + k.a4 * (W2 * W2);
  t.bottomRightCorner<3, 3>() = t.topLeftCorner<3, 3>();
  t.topRightCorner<3, 3>().setZero();
  t.bottomLeftCorner<3, 3>() = -k.a1 * V + k.a2 * L2 - k.a3 * L3 + k.a4 * L4;
  return t;
}

inline Vec6 tangent_apply(const Vec6& omega, const Vec6& x) {
  const auto k = detail::tangent_coeffs(omega.head<3>().norm());
  const Vec6 u1 = ad_apply(omega, x);
  const Vec6 u2 = ad_apply(omega, u1);
  const Vec6 u3 = ad_apply(omega, u2);
  const Vec6 u4 = ad_apply(omega, u3);
  return x - k.a1 * u1 + k.a2 * u2 - k.a3 * u3 + k.a4 * u4;
}

/// d/dt [T(Omega)] * x along the rate omega_dot.
inline Vec6 tangent_dot_apply(const Vec6& omega, const Vec6& omega_dot, const Vec6& x) {
  const Vec3 w = omega.head<3>();
  const auto k = detail::tangent_coeffs(w.norm());
  const double th_th_dot = w.dot(omega_dot.head<3>());  // t * dt/dt

  const Vec6 u1 = ad_apply(omega, x);
  const Vec6 u2 = ad_apply(omega, u1);
  const Vec6 u3 = ad_apply(omega, u2);
  const Vec6 u4 = ad_apply(omega, u3);
  // d(ad^n) x = ad_dot ad^{n-1} x + ad d(ad^{n-1}) x
  const Vec6 d1 = ad_apply(omega_dot, x);
  const Vec6 d2 = ad_apply(omega_dot, u1) + ad_apply(omega, d1);
  const Vec6 d3 = ad_apply(omega_dot, u2) + ad_apply(omega, d2);
  const Vec6 d4 = ad_apply(omega_dot, u3) + ad_apply(omega, d3);

  return th_th_dot * (-k.b1 * u1 + k.b2 * u2 - k.b3 * u3 + k.b4 * u4) - k.a1 * d1 + k.a2 * d2 - k.a3 * d3 +
         k.a4 * d4;
}

/// One fourth-order Magnus step over a segment of length h with strains xi1,
/// xi2 sampled at the two Gauss-Legendre points.
inline Vec6 magnus_omega(const Vec6& xi1, const Vec6& xi2, double h) {
  static const double kC = std::sqrt(3.0) / 12.0;
  return 0.5 * h * (xi1 + xi2) + kC * h * h * ad_apply(xi1, xi2);
}

/// Gauss-Legendre abscissae (fractions of the segment) used by magnus_omega.
inline constexpr double kMagnusNode1 = 0.5 - 0.28867513459481288225;  // 1/2 - sqrt(3)/6
inline constexpr double kMagnusNode2 = 0.5 + 0.28867513459481288225;

/// Pose of cross-section x1 relative to x0 under the strain field xi(X),
/// integrated with `segments` fourth-order Magnus steps. Exact when xi is
/// constant.
template <class StrainField>
Pose exp_varying_strain(StrainField&& xi, double x0, double x1, int segments = 16) {
  Pose g;
  if (x1 <= x0 || segments < 1) return g;
  const double h = (x1 - x0) / segments;
  for (int s = 0; s < segments; ++s) {
    const double xa = x0 + s * h;
    const Vec6 xi1 = xi(xa + kMagnusNode1 * h);
    const Vec6 xi2 = xi(xa + kMagnusNode2 * h);
    g = g * exp_twist(magnus_omega(xi1, xi2, h));
  }
  return g;
}

/// Affine strain field xi(X) = at_zero + X * slope.
struct AffineStrain {
  Vec6 at_zero = Vec6::Zero();
  Vec6 slope = Vec6::Zero();
  Vec6 operator()(double x) const { return at_zero + x * slope; }
};

// Re-orthonormalization tolerance on ||R^T R - I||_F.
inline constexpr double kOrthoTolerance = 1e-9;

inline double orthogonality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

/// Polar projection onto SO(3). Returns true when a correction was applied.
inline bool reorthonormalize(Mat3& r, double tolerance = kOrthoTolerance) {
  if (orthogonality_error(r) <= tolerance) return false;
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  r = u * v.transpose();
  return true;
}

// Roll-pitch-yaw with R = Rz(psi) Ry(theta) Rx(phi).
inline Mat3 rotation_from_euler(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

inline Vec3 euler_from_rotation(const Mat3& r) {
  const double theta = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double phi = std::atan2(r(2, 1), r(2, 2));
  const double psi = std::atan2(r(1, 0), r(0, 0));
  return {phi, theta, psi};
}

/// Maps body angular velocity to roll-pitch-yaw rates.
inline Mat3 euler_rate_matrix(const Vec3& rpy) {
  const double sp = std::sin(rpy.x()), cp = std::cos(rpy.x());
  const double tt = std::tan(rpy.y()), ct = std::cos(rpy.y());
  Mat3 e;
  e << 1.0, sp * tt, cp * tt, 0.0, cp, -sp, 0.0, sp / ct, cp / ct;
  return e;
}

/// Spatial inertia about a frame origin for a body of given mass, centre of
/// mass c and rotational inertia about c (all in that frame).
inline Mat6 spatial_inertia(double mass, const Vec3& c, const Mat3& inertia_at_com) {
  const Mat3 C = skew(c);
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = inertia_at_com - mass * C * C;
  m.topRightCorner<3, 3>() = mass * C;
  m.bottomLeftCorner<3, 3>() = mass * C.transpose();
  m.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return m;
}

inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * M_PI);
}

}  // namespace zodiaq
