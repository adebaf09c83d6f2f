#include "nmrt/rotation.hpp"

#include <algorithm>

#include "nmrt/errors.hpp"

namespace nmrt {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
}  // namespace

AxisTriple parse_axis_order(const std::string& s) {
  if (s.size() != 3) fail(ErrKind::SchemaError, "axis order must have 3 letters, got '" + s + "'");
  AxisTriple out{};
  bool seen[3] = {false, false, false};
  for (int i = 0; i < 3; ++i) {
    char c = s[static_cast<size_t>(i)];
    int a = c == 'X' ? 0 : c == 'Y' ? 1 : c == 'Z' ? 2 : -1;
    if (a < 0) fail(ErrKind::SchemaError, "axis order letter must be X, Y or Z in '" + s + "'");
    if (seen[a]) fail(ErrKind::SchemaError, "axis order repeats an axis in '" + s + "'");
    seen[a] = true;
    out[static_cast<size_t>(i)] = static_cast<Axis>(a);
  }
  return out;
}

std::string axis_order_name(AxisTriple order) {
  std::string s;
  for (Axis a : order) s += "XYZ"[static_cast<int>(a)];
  return s;
}

Quat Quat::axis_angle_deg(Axis axis, double deg) {
  double h = 0.5 * deg * kDegToRad;
  double s = std::sin(h), c = std::cos(h);
  switch (axis) {
    case Axis::X: return {c, s, 0.0, 0.0};
    case Axis::Y: return {c, 0.0, s, 0.0};
    case Axis::Z: return {c, 0.0, 0.0, s};
  }
  return identity();
}

Mat3 Quat::to_matrix() const {
  Quat q = normalized();
  double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  return {{{ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy)},
           {2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx)},
           {2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz}}};
}

double Quat::angular_distance_deg(const Quat& a, const Quat& b) {
  // Chord-based form: acos(|dot|) cannot resolve angles below ~1e-6 degrees
  // because acos is ill-conditioned near 1. With hemispheres aligned the
  // rotation angle is 4*asin(|a - b| / 2), accurate down to zero.
  Quat an = a.normalized();
  Quat bn = b.normalized();
  if (an.dot(bn) < 0.0) bn = {-bn.w, -bn.x, -bn.y, -bn.z};
  const double dw = an.w - bn.w, dx = an.x - bn.x, dy = an.y - bn.y, dz = an.z - bn.z;
  const double half_chord = 0.5 * std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
  return 4.0 * std::asin(std::min(half_chord, 1.0)) * kRadToDeg;
}

Quat euler_to_quaternion(const std::array<double, 3>& degrees, AxisTriple order) {
  Quat q = Quat::axis_angle_deg(order[0], degrees[0]) *
           Quat::axis_angle_deg(order[1], degrees[1]) *
           Quat::axis_angle_deg(order[2], degrees[2]);
  return q.normalized().canonical();
}

namespace {

// Extracts the rotation angle about `axis` from a quaternion assumed to be a
// pure rotation about that axis (used on the gimbal-lock branch residual).
double pure_axis_angle_deg(Quat q, Axis axis) {
  q = q.canonical();
  double s = axis == Axis::X ? q.x : axis == Axis::Y ? q.y : q.z;
  return 2.0 * std::atan2(s, q.w) * kRadToDeg;
}

}  // namespace

EulerAngles quaternion_to_euler(const Quat& q_in, AxisTriple order) {
  Quat q = q_in.normalized();
  Mat3 r = q.to_matrix();
  int i = static_cast<int>(order[0]);
  int j = static_cast<int>(order[1]);
  int k = static_cast<int>(order[2]);
  // Cyclic permutations (XYZ, YZX, ZXY) have sigma = +1, anti-cyclic -1.
  double sigma = ((i + 1) % 3 == j) ? 1.0 : -1.0;

  double m = std::clamp(sigma * r[static_cast<size_t>(i)][static_cast<size_t>(k)], -1.0, 1.0);
  double b = std::asin(m);

  EulerAngles out;
  constexpr double kLockWindowDeg = 0.5;
  if (std::abs(b) * kRadToDeg > 90.0 - kLockWindowDeg) {
    // Near lock the first and third axes align; zero the third angle and fold
    // everything else into the first.
    out.gimbal_flag = true;
    out.deg[1] = b * kRadToDeg;
    out.deg[2] = 0.0;
    Quat residual = q * Quat::axis_angle_deg(order[1], out.deg[1]).conjugate();
    out.deg[0] = pure_axis_angle_deg(residual, order[0]);
    return out;
  }

  double a = std::atan2(-sigma * r[static_cast<size_t>(j)][static_cast<size_t>(k)],
                        r[static_cast<size_t>(k)][static_cast<size_t>(k)]);
  double c = std::atan2(-sigma * r[static_cast<size_t>(i)][static_cast<size_t>(j)],
                        r[static_cast<size_t>(i)][static_cast<size_t>(i)]);
  out.deg = {a * kRadToDeg, b * kRadToDeg, c * kRadToDeg};
  return out;
}

}  // namespace nmrt
