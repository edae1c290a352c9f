#pragma once

// Regular dodecahedron shell: vertex coordinates, face centres/normals and the
// motor numbering used by the rest of the library.
//
// Orientation: one face on top (normal +z) and one at the bottom (normal -z).
// The five upper-ring faces sit at azimuths 0, 72, ..., 288 degrees and the
// lower ring is offset by 36 degrees. Motor numbers per (ring, azimuth):
//
//   upper:  0 -> M1,  72 -> M11, 144 -> M7, 216 -> M5, 288 -> M9
//   lower: 36 -> M6, 108 -> M10, 180 -> M2, 252 -> M12, 324 -> M8
//   top -> M3, bottom -> M4
//
// so that consecutive motors (1,2), (3,4), ..., (11,12) face each other.

#include "zodiaq/se3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace zodiaq {

inline constexpr int kNumFaces = 12;

struct Face {
  int motor = 0;  // 1-based motor number
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // outward unit normal
  /// Shaft mounting frame: origin at the face centre, local x along the
  /// outward normal.
  Pose mount;
};

struct Dodecahedron {
  double edge_length = 0.0;
  std::vector<Vec3> vertices;
  std::array<Face, kNumFaces> faces;  // indexed by motor - 1

  double inradius() const { return faces[0].center.norm(); }
  const Face& face(int motor) const { return faces.at(static_cast<std::size_t>(motor - 1)); }
};

/// Inradius of a regular dodecahedron of edge a.
inline double dodecahedron_inradius(double a) {
  return 0.5 * a * std::sqrt(2.5 + 1.1 * std::sqrt(5.0));
}

inline double dodecahedron_volume(double a) {
  return (15.0 + 7.0 * std::sqrt(5.0)) / 4.0 * a * a * a;
}

/// Opposite-face partner of a motor (1<->2, 3<->4, ...).
inline int paired_motor(int motor) { return motor % 2 == 1 ? motor + 1 : motor - 1; }

namespace detail {

inline Mat3 rotation_taking(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

// Local y is the in-face direction closest to world up (x for the top and
// bottom faces), which makes mirror-image faces carry mirror-image frames.
inline Pose face_mount(const Vec3& center, const Vec3& normal) {
  const Vec3 ref = std::abs(normal.z()) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 y = (ref - ref.dot(normal) * normal).normalized();
  Mat3 r;
  r.col(0) = normal;
  r.col(1) = y;
  r.col(2) = normal.cross(y);
  return {r, center};
}

}  // namespace detail

/// Builds the face table from the canonical vertex set (+-1,+-1,+-1),
/// (0,+-1/phi,+-phi) and cyclic permutations, scaled to edge length a.
inline Dodecahedron make_dodecahedron(double edge_length) {
  if (!(edge_length > 0.0)) throw std::invalid_argument("dodecahedron edge length must be positive");
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v;
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) v.emplace_back(a, b, c);
  for (int a : {-1, 1})
    for (int b : {-1, 1}) {
      v.emplace_back(0.0, a / phi, b * phi);
      v.emplace_back(a / phi, b * phi, 0.0);
      v.emplace_back(a * phi, 0.0, b / phi);
    }
  std::vector<Vec3> normals;
  for (int a : {-1, 1})
    for (int b : {-1, 1}) {
      normals.push_back(Vec3(0.0, a * phi, b).normalized());
      normals.push_back(Vec3(b, 0.0, a * phi).normalized());
      normals.push_back(Vec3(a * phi, b, 0.0).normalized());
    }

  const double scale = edge_length / (2.0 / phi);
  Mat3 rot = detail::rotation_taking(Vec3(0.0, phi, 1.0).normalized(), Vec3::UnitZ());

  // Spin about z so the lowest-azimuth upper-ring face lands at azimuth 0.
  double min_az = 4.0 * M_PI;
  for (const Vec3& n : normals) {
    const Vec3 r = rot * n;
    if (r.z() > 0.1 && r.z() < 0.9) {
      double az = std::atan2(r.y(), r.x());
      if (az < 0.0) az += 2.0 * M_PI;
      min_az = std::min(min_az, az);
    }
  }
  rot = Eigen::AngleAxisd(-min_az, Vec3::UnitZ()).toRotationMatrix() * rot;

  Dodecahedron d;
  d.edge_length = edge_length;
  for (const Vec3& x : v) d.vertices.push_back(scale * (rot * x));

  static constexpr int kUpper[5] = {1, 11, 7, 5, 9};   // azimuth 0, 72, ...
  static constexpr int kLower[5] = {6, 10, 2, 12, 8};  // azimuth 36, 108, ...
  std::array<bool, kNumFaces> assigned{};
  for (const Vec3& n0 : normals) {
    const Vec3 n = rot * n0;
    // Face centre = centroid of the five vertices farthest along n.
    std::vector<std::pair<double, int>> dots;
    for (int i = 0; i < static_cast<int>(d.vertices.size()); ++i) dots.emplace_back(-d.vertices[i].dot(n), i);
    std::sort(dots.begin(), dots.end());
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < 5; ++i) c += d.vertices[dots[i].second];
    c /= 5.0;

    int motor;
    if (n.z() > 0.9) {
      motor = 3;
    } else if (n.z() < -0.9) {
      motor = 4;
    } else {
      double az = std::atan2(n.y(), n.x());
      if (az < 0.0) az += 2.0 * M_PI;
      const double step = 2.0 * M_PI / 5.0;
      if (n.z() > 0.0) {
        motor = kUpper[static_cast<int>(std::lround(az / step)) % 5];
      } else {
        motor = kLower[static_cast<int>(std::lround((az - 0.5 * step) / step)) % 5];
      }
    }
    auto& f = d.faces[static_cast<std::size_t>(motor - 1)];
    if (assigned[static_cast<std::size_t>(motor - 1)]) throw std::logic_error("duplicate face assignment");
    assigned[static_cast<std::size_t>(motor - 1)] = true;
    f.motor = motor;
    f.normal = n;
    f.center = c;
    f.mount = detail::face_mount(c, n);
  }
  return d;
}

}  // namespace zodiaq
