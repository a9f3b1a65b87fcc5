#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace grasshopper {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

/// Geodesic angle between two unit vectors, in [0, pi]. Uses the chord form,
/// which keeps full precision for nearly coincident and nearly antipodal pairs.
inline double spherical_angle(const Vec3& u, const Vec3& v) {
  const double chord = norm(u - v);
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
}

/// Right-handed orthonormal frame whose third axis is `axis`.
struct Frame {
  Vec3 e1;
  Vec3 e2;
  Vec3 e3;

  static Frame about(const Vec3& axis) {
    const Vec3 w = normalized(axis);
    const Vec3 helper = std::abs(w.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 u = normalized(cross(helper, w));
    return {u, cross(w, u), w};
  }

  Vec3 to_local(const Vec3& p) const { return {dot(p, e1), dot(p, e2), dot(p, e3)}; }
  Vec3 to_world(const Vec3& q) const { return e1 * q.x + e2 * q.y + e3 * q.z; }
};

/// Polar angle in [0, pi] measured from +z.
inline double polar_angle(const Vec3& p) { return std::atan2(std::hypot(p.x, p.y), p.z); }

/// Azimuth in [0, 2pi).
inline double azimuth(const Vec3& p) {
  double phi = std::atan2(p.y, p.x);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
  return phi;
}

inline Vec3 from_spherical(double polar, double azim) {
  const double s = std::sin(polar);
  return {s * std::cos(azim), s * std::sin(azim), std::cos(polar)};
}

}  // namespace grasshopper
