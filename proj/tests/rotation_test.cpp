#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmrt/errors.hpp"
#include "nmrt/rng.hpp"
#include "nmrt/rotation.hpp"
#include "support.hpp"

using namespace nmrt;
using namespace nmrt::test;

namespace {

const std::vector<std::string> kOrders = {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"};

/// Oracle: intrinsic euler composition as a product of axis matrices.
Mat3 euler_matrix_oracle(const std::array<double, 3>& deg, AxisTriple order) {
  Mat3 m = axis_matrix(order[0], deg[0]);
  m = mat3_mul(m, axis_matrix(order[1], deg[1]));
  return mat3_mul(m, axis_matrix(order[2], deg[2]));
}

}  // namespace

TEST_CASE("zero euler angles give the identity quaternion for every order") {
  for (const std::string& name : kOrders) {
    const Quat q = euler_to_quaternion({0.0, 0.0, 0.0}, parse_axis_order(name));
    CHECK(q.w == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(q.x) < 1e-15);
    CHECK(std::abs(q.y) < 1e-15);
    CHECK(std::abs(q.z) < 1e-15);
  }
}

TEST_CASE("a 90 degree first-axis turn in ZXY order yields the pinned quaternion") {
  const Quat q = euler_to_quaternion({90.0, 0.0, 0.0}, parse_axis_order("ZXY"));
  CHECK(q.w == doctest::Approx(0.7071068).epsilon(1e-6));
  CHECK(std::abs(q.x) < 1e-12);
  CHECK(std::abs(q.y) < 1e-12);
  CHECK(q.z == doctest::Approx(0.7071068).epsilon(1e-6));
}

TEST_CASE("euler_to_quaternion matches the axis-matrix oracle on 1000 draws") {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::array<double, 3> deg = {rng.uniform(-180.0, 180.0), rng.uniform(-180.0, 180.0),
                                       rng.uniform(-180.0, 180.0)};
    const AxisTriple order = parse_axis_order(kOrders[static_cast<size_t>(rng.uniform_int(6))]);
    const Quat q = euler_to_quaternion(deg, order);
    CHECK(q.w >= 0.0);
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    worst = std::max(worst, mat3_max_abs_diff(q.to_matrix(), euler_matrix_oracle(deg, order)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("to_matrix agrees with an independently written quaternion-matrix formula") {
  Rng rng(102);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Quat q = random_quat(rng);
    worst = std::max(worst, mat3_max_abs_diff(q.to_matrix(), quat_matrix(q)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("euler round trip recovers the rotation within 1e-6 degrees") {
  Rng rng(103);
  int flagged = 0;
  for (int i = 0; i < 1000; ++i) {
    const Quat q = random_quat(rng);
    const AxisTriple order = parse_axis_order(kOrders[static_cast<size_t>(rng.uniform_int(6))]);
    const EulerAngles e = quaternion_to_euler(q, order);
    if (e.gimbal_flag) {
      ++flagged;  // decomposition is ambiguous within 0.5 deg of lock
      CHECK(std::abs(std::abs(e.deg[1]) - 90.0) <= 0.5);
      continue;
    }
    const Quat back = euler_to_quaternion(e.deg, order);
    CHECK(Quat::angular_distance_deg(q, back) < 1e-6);
  }
  CHECK(flagged < 20);
}

TEST_CASE("gimbal lock zeroes the third angle and raises the flag") {
  const AxisTriple order = parse_axis_order("ZXY");
  const Quat q = euler_to_quaternion({30.0, 90.0, 45.0}, order);
  const EulerAngles e = quaternion_to_euler(q, order);

  CHECK(e.gimbal_flag);
  CHECK(e.deg[1] == doctest::Approx(90.0).epsilon(1e-9));
  CHECK(e.deg[2] == 0.0);
  // At exact lock the (first, 90, 0) decomposition still reproduces the
  // rotation: first and third axes have merged.
  const Quat back = euler_to_quaternion(e.deg, order);
  CHECK(Quat::angular_distance_deg(q, back) < 1e-9);
}

TEST_CASE("quaternion composition is associative and matches vector rotation") {
  Rng rng(104);
  for (int i = 0; i < 200; ++i) {
    const Quat a = random_quat(rng), b = random_quat(rng), c = random_quat(rng);
    const Quat left = ((a * b) * c).canonical();
    const Quat right = (a * (b * c)).canonical();
    CHECK(std::abs(left.w - right.w) < 1e-12);
    CHECK(std::abs(left.x - right.x) < 1e-12);
    CHECK(std::abs(left.y - right.y) < 1e-12);
    CHECK(std::abs(left.z - right.z) < 1e-12);

    const Vec3 v{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const Vec3 once = (a * b).rotate(v);
    const Vec3 twice = a.rotate(b.rotate(v));
    CHECK(std::abs(once.x - twice.x) < 1e-12);
    CHECK(std::abs(once.y - twice.y) < 1e-12);
    CHECK(std::abs(once.z - twice.z) < 1e-12);
  }
}

TEST_CASE("axis-angle constructor and canonical form behave as documented") {
  const Quat x90 = Quat::axis_angle_deg(Axis::X, 90.0);
  CHECK(x90.w == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(x90.x == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  const Vec3 r = x90.rotate({0.0, 1.0, 0.0});
  CHECK(std::abs(r.x) < 1e-12);
  CHECK(std::abs(r.y) < 1e-12);
  CHECK(r.z == doctest::Approx(1.0).epsilon(1e-12));

  const Quat q{-0.5, 0.5, 0.5, 0.5};
  const Quat canon = q.canonical();
  CHECK(canon.w == 0.5);
  CHECK(canon.x == -0.5);
  CHECK(Quat::angular_distance_deg(q, canon) < 1e-12);
}

TEST_CASE("axis order parsing accepts the six permutations and rejects the rest") {
  for (const std::string& name : kOrders) CHECK(axis_order_name(parse_axis_order(name)) == name);
  for (const char* bad : {"ZXX", "AB", "", "XY", "xyzw"}) {
    CAPTURE(bad);
    try {
      parse_axis_order(bad);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrKind::SchemaError);
    }
  }
}
