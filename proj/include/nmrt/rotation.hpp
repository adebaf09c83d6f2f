#pragma once

#include <array>
#include <cmath>
#include <string>

namespace nmrt {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.dot(b); }
inline Vec3 cross(const Vec3& a, const Vec3& b) { return a.cross(b); }

enum class Axis : int { X = 0, Y = 1, Z = 2 };

using AxisTriple = std::array<Axis, 3>;

/// Parses "ZXY" style order strings; throws SchemaError on anything else.
AxisTriple parse_axis_order(const std::string& s);
std::string axis_order_name(AxisTriple order);

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Unit rotation quaternion, scalar-first (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static Quat axis_angle_deg(Axis axis, double deg);

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  Quat conjugate() const { return {w, -x, -y, -z}; }
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }

  Quat normalized() const {
    double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  /// q and -q denote the same rotation; canonical form has w >= 0.
  Quat canonical() const { return w < 0.0 ? Quat{-w, -x, -y, -z} : *this; }

  /// Rotates v, assuming *this is unit-norm.
  Vec3 rotate(const Vec3& v) const {
    Vec3 u{x, y, z};
    Vec3 c = u.cross(v);
    return v + (c * (2.0 * w)) + (u.cross(c) * 2.0);
  }

  Mat3 to_matrix() const;

  /// Angle of the rotation q_a * conj(q_b), in degrees. Zero iff same rotation.
  static double angular_distance_deg(const Quat& a, const Quat& b);
};

struct EulerAngles {
  std::array<double, 3> deg{0.0, 0.0, 0.0};
  bool gimbal_flag = false;  // set when the middle angle is within 0.5 deg of lock
};

/// Intrinsic composition of the three axis rotations in declared order,
/// matching BVH channel semantics. Result is unit-norm with w >= 0.
Quat euler_to_quaternion(const std::array<double, 3>& degrees, AxisTriple order);

/// Inverse of euler_to_quaternion up to quaternion sign. Near gimbal lock
/// (middle angle within 0.5 deg of +-90) the third angle is zeroed and
/// gimbal_flag is set.
EulerAngles quaternion_to_euler(const Quat& q, AxisTriple order);

}  // namespace nmrt
