#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "nmrt/errors.hpp"
#include "nmrt/retarget_net.hpp"
#include "nmrt/rng.hpp"
#include "support.hpp"

using namespace nmrt;
using namespace nmrt::test;

namespace {

// Human side: 7 actuated joints over 5 parts -> F = 4*7 + 3 = 31.
Skeleton human_skeleton() {
  return make_chain({{"root", JointKind::Fixed, {0, 0, 0}, "ZXY"},
                     {"h1", JointKind::Actuated, {0, 0.2, 0}, "ZXY"},
                     {"h2", JointKind::Actuated, {0, 0.2, 0}, "ZXY"},
                     {"h3", JointKind::Actuated, {0, 0.2, 0}, "ZXY"},
                     {"h4", JointKind::Actuated, {0.2, 0, 0}, "ZXY"},
                     {"h5", JointKind::Actuated, {0.2, 0, 0}, "ZXY"},
                     {"h6", JointKind::Actuated, {0.2, 0, 0}, "ZXY"},
                     {"h7", JointKind::Actuated, {0.2, 0, 0}, "ZXY"},
                     {"hee_end", JointKind::EndEffector, {0.2, 0, 0}, "ZXY"}});
}

SkeletonConfig human_config(double height = 1.0) {
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},    {"h1", JointKind::Actuated},
               {"h2", JointKind::Actuated},   {"h3", JointKind::Actuated},
               {"h4", JointKind::Actuated},   {"h5", JointKind::Actuated},
               {"h6", JointKind::Actuated},   {"h7", JointKind::Actuated},
               {"hee_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0}, {"h1", 0}, {"h2", 1}, {"h3", 1},      {"h4", 2},
               {"h5", 2},   {"h6", 3}, {"h7", 4}, {"hee_end", 4}};
  cfg.end_effectors = {"hee_end", "hee_end", "hee_end"};
  cfg.height = height;
  cfg.chest = "h2";
  return cfg;
}

// Robot side: 6 actuated joints over the same 5 parts -> F = 27.
Skeleton robot_skeleton() {
  return make_chain({{"base", JointKind::Fixed, {0, 0, 0}, "ZXY"},
                     {"r1", JointKind::Actuated, {0, 0.3, 0}, "ZXY"},
                     {"r2", JointKind::Actuated, {0, 0.3, 0}, "ZXY"},
                     {"r3", JointKind::Actuated, {0.3, 0, 0}, "ZXY"},
                     {"r4", JointKind::Actuated, {0.3, 0, 0}, "ZXY"},
                     {"r5", JointKind::Actuated, {0.3, 0, 0}, "ZXY"},
                     {"r6", JointKind::Actuated, {0.3, 0, 0}, "ZXY"},
                     {"ree_end", JointKind::EndEffector, {0.3, 0, 0}, "ZXY"}});
}

SkeletonConfig robot_config(double height = 1.4) {
  SkeletonConfig cfg;
  cfg.kinds = {{"base", JointKind::Fixed},  {"r1", JointKind::Actuated},
               {"r2", JointKind::Actuated}, {"r3", JointKind::Actuated},
               {"r4", JointKind::Actuated}, {"r5", JointKind::Actuated},
               {"r6", JointKind::Actuated}, {"ree_end", JointKind::EndEffector}};
  cfg.parts = {{"base", 0}, {"r1", 0}, {"r2", 1}, {"r3", 2},
               {"r4", 3},   {"r5", 4}, {"r6", 4}, {"ree_end", 4}};
  cfg.end_effectors = {"ree_end", "ree_end", "ree_end"};
  cfg.height = height;
  cfg.chest = "r2";
  return cfg;
}

RetargetModel make_model(unsigned long long seed = 7, double robot_height = 1.4) {
  Rng rng(seed);
  return RetargetModel(DomainSpec(human_skeleton(), human_config()),
                       DomainSpec(robot_skeleton(), robot_config(robot_height)),
                       ModelConfig{}, rng);
}

Tensor random_window(Rng& rng, int rows, int t_len) {
  Tensor w({rows, t_len});
  for (long i = 0; i < w.numel(); ++i) w.data()[static_cast<size_t>(i)] = rng.normal();
  return w;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data(), b.data(),
                     static_cast<size_t>(a.numel()) * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("feature layout counts four rows per actuated joint plus translation") {
  const DomainSpec human(human_skeleton(), human_config());
  const DomainSpec robot(robot_skeleton(), robot_config());
  CHECK(human.feature_rows() == 31);
  CHECK(robot.feature_rows() == 27);
  CHECK(human.part_count() == 5);
  CHECK(robot.part_count() == 5);
}

TEST_CASE("encode maps a 31x64 window to the 80x32 shared latent") {
  const RetargetModel model = make_model();
  Rng rng(11);
  const Tensor window = random_window(rng, 31, 64);
  const Tensor latent = model.encode(Domain::Human, window);
  REQUIRE(latent.rank() == 2);
  CHECK(latent.dim(0) == 80);  // P=5 parts x L=16 channels
  CHECK(latent.dim(1) == 32);
  CHECK(model.latent_rows() == 80);
}

TEST_CASE("a constant-in-time window encodes to a constant-in-time latent") {
  const RetargetModel model = make_model();
  Rng rng(12);
  Tensor window({31, 64});
  for (int r = 0; r < 31; ++r) {
    const double v = rng.normal();
    for (int t = 0; t < 64; ++t)
      window.data()[static_cast<size_t>(r) * 64 + static_cast<size_t>(t)] = v;
  }
  const Tensor latent = model.encode(Domain::Human, window);
  for (int r = 0; r < latent.dim(0); ++r)
    for (int t = 1; t < latent.dim(1); ++t) {
      const double first = latent.data()[static_cast<size_t>(r) * latent.dim(1)];
      const double v = latent.data()[static_cast<size_t>(r) * latent.dim(1) +
                                     static_cast<size_t>(t)];
      CHECK(std::abs(v - first) < 1e-9);
    }
}

TEST_CASE("skeleton pooling averages the units of a part") {
  const RetargetModel model = make_model();
  const DomainSpec& sp = model.spec(Domain::Human);
  const Tensor& pool = model.pool_matrix(Domain::Human);
  const int L = model.model_config().latent;
  const int units = static_cast<int>(sp.units().size());
  REQUIRE(pool.dim(0) == 80);
  REQUIRE(pool.dim(1) == units * L);

  // Part 0 holds two units (first actuated joint + root translation). Give
  // them channel values 1 and 3; the pooled part must read 2.
  const PartBlock& part0 = sp.parts()[0];
  REQUIRE(part0.unit_count == 2);
  Tensor x({units * L});
  for (int u = 0; u < part0.unit_count; ++u)
    for (int c = 0; c < L; ++c)
      x.data()[static_cast<size_t>((part0.unit_begin + u) * L + c)] = u == 0 ? 1.0 : 3.0;
  const Tensor pooled = matmul(pool, x);
  for (int c = 0; c < L; ++c) CHECK(pooled.data()[static_cast<size_t>(c)] == 2.0);
}

TEST_CASE("unpool then pool is the identity on part-level latents") {
  const RetargetModel model = make_model();
  Rng rng(13);
  for (Domain d : {Domain::Human, Domain::Robot}) {
    const Tensor z = random_window(rng, model.latent_rows(), 1);
    const Tensor back = matmul(model.pool_matrix(d), matmul(model.unpool_matrix(d), z));
    REQUIRE(back.numel() == z.numel());
    for (long i = 0; i < z.numel(); ++i)
      CHECK(back.data()[static_cast<size_t>(i)] ==
            doctest::Approx(z.data()[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("pool then unpool is the identity on constant-per-part features") {
  const RetargetModel model = make_model();
  const DomainSpec& sp = model.spec(Domain::Human);
  const int L = model.model_config().latent;
  const int units = static_cast<int>(sp.units().size());
  Rng rng(14);

  Tensor x({units * L});
  for (size_t p = 0; p < sp.parts().size(); ++p) {
    const PartBlock& blk = sp.parts()[p];
    for (int c = 0; c < L; ++c) {
      const double v = rng.normal();
      for (int u = 0; u < blk.unit_count; ++u)
        x.data()[static_cast<size_t>((blk.unit_begin + u) * L + c)] = v;
    }
  }
  const Tensor back = matmul(model.unpool_matrix(Domain::Human),
                             matmul(model.pool_matrix(Domain::Human), x));
  for (long i = 0; i < x.numel(); ++i)
    CHECK(back.data()[static_cast<size_t>(i)] ==
          doctest::Approx(x.data()[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("decode returns unit quaternions and the declared feature width") {
  const RetargetModel model = make_model();
  Rng rng(15);
  const Tensor latent = random_window(rng, 80, 32);

  const Tensor human_out = model.decode(Domain::Human, latent);
  REQUIRE(human_out.dim(0) == 31);
  REQUIRE(human_out.dim(1) == 64);
  const Tensor robot_out = model.decode(Domain::Robot, latent);
  REQUIRE(robot_out.dim(0) == 27);
  REQUIRE(robot_out.dim(1) == 64);

  for (Domain d : {Domain::Human, Domain::Robot}) {
    const Tensor& out = d == Domain::Human ? human_out : robot_out;
    const DomainSpec& sp = model.spec(d);
    for (const RowSpan& span : sp.quat_spans()) {
      REQUIRE(span.second == 4);
      for (int t = 0; t < out.dim(1); ++t) {
        double norm2 = 0.0;
        for (int r = span.first; r < span.first + 4; ++r) {
          const double v = out.data()[static_cast<size_t>(r) * out.dim(1) +
                                      static_cast<size_t>(t)];
          norm2 += v * v;
        }
        CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("decode and encode shapes round trip for several window lengths") {
  const RetargetModel model = make_model();
  Rng rng(16);
  for (Domain d : {Domain::Human, Domain::Robot}) {
    const int rows = model.spec(d).feature_rows();
    for (int t_len : {8, 16, 64}) {
      const Tensor x = random_window(rng, rows, t_len);
      const Tensor latent = model.encode(d, x);
      CHECK(latent.dim(0) == model.latent_rows());
      CHECK(latent.dim(1) == t_len / 2);
      const Tensor y = model.decode(d, latent);
      CHECK(y.dim(0) == rows);
      CHECK(y.dim(1) == t_len);
    }
  }
}

TEST_CASE("encode rejects bad window shapes") {
  const RetargetModel model = make_model();
  Rng rng(17);
  CHECK_THROWS_AS(model.encode(Domain::Human, random_window(rng, 31, 63)), Error);  // odd T
  CHECK_THROWS_AS(model.encode(Domain::Human, random_window(rng, 31, 6)), Error);   // T < 8
  CHECK_THROWS_AS(model.encode(Domain::Human, random_window(rng, 27, 64)), Error);  // wrong F
}

TEST_CASE("retargeting a human window yields a robot-width window deterministically") {
  const RetargetModel model = make_model();
  Rng rng(18);
  const Tensor window = random_window(rng, 31, 64);
  const Tensor out1 = model.retarget_window(Domain::Human, window);
  REQUIRE(out1.dim(0) == 27);
  REQUIRE(out1.dim(1) == 64);
  const Tensor out2 = model.retarget_window(Domain::Human, window);
  CHECK(bitwise_equal(out1, out2));

  const Tensor cycled = model.cycle_window(Domain::Human, window);
  CHECK(cycled.dim(0) == 31);
  CHECK(cycled.dim(1) == 64);
}

TEST_CASE("two models built from the same seed are bitwise identical") {
  const RetargetModel a = make_model(99);
  const RetargetModel b = make_model(99);
  REQUIRE(a.params().size() == b.params().size());
  for (size_t i = 0; i < a.params().size(); ++i) CHECK(bitwise_equal(a.params()[i], b.params()[i]));

  Rng rng(19);
  const Tensor window = random_window(rng, 31, 32);
  CHECK(bitwise_equal(a.retarget_window(Domain::Human, window),
                      b.retarget_window(Domain::Human, window)));
}

TEST_CASE("root translation is scaled by the domain height ratio") {
  // Same seed twice: parameters agree, only the configured height differs.
  const RetargetModel unit = make_model(5, 1.0);
  const RetargetModel tall = make_model(5, 2.0);
  Rng rng(20);
  const Tensor window = random_window(rng, 31, 16);
  const Tensor a = unit.retarget_window(Domain::Human, window);
  const Tensor b = tall.retarget_window(Domain::Human, window);

  const DomainSpec& sp = unit.spec(Domain::Robot);
  const int tr = sp.translation_row();
  for (int r = 0; r < sp.feature_rows(); ++r)
    for (int t = 0; t < 16; ++t) {
      const double va = a.data()[static_cast<size_t>(r) * 16 + static_cast<size_t>(t)];
      const double vb = b.data()[static_cast<size_t>(r) * 16 + static_cast<size_t>(t)];
      if (r >= tr && r < tr + 3)
        CHECK(vb == doctest::Approx(2.0 * va).epsilon(1e-12));
      else
        CHECK(vb == va);
    }
}

TEST_CASE("the identity test-double passes windows through untouched") {
  Rng rng(21);
  RetargetModel model(DomainSpec(human_skeleton(), human_config()),
                      DomainSpec(human_skeleton(), human_config()), ModelConfig{}, rng);
  model.set_identity_double(true);
  const Tensor window = random_window(rng, 31, 24);
  CHECK(bitwise_equal(model.retarget_window(Domain::Human, window), window));
  CHECK(bitwise_equal(model.cycle_window(Domain::Human, window), window));
}

TEST_CASE("the identity test-double refuses mismatched feature widths") {
  RetargetModel model = make_model();
  model.set_identity_double(true);
  Rng rng(22);
  CHECK_THROWS_AS(model.retarget_window(Domain::Human, random_window(rng, 31, 16)), Error);
}

TEST_CASE("a zeroed discriminator scores every window as zero") {
  RetargetModel model = make_model();
  for (Tensor& p : model.discriminator_params(Domain::Human))
    for (long i = 0; i < p.numel(); ++i) p.data()[static_cast<size_t>(i)] = 0.0;

  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor score = model.discriminate(Domain::Human, random_window(rng, 31, 64));
    CHECK(score.rank() == 0);
    REQUIRE(score.numel() == 1);
    CHECK(score.data()[0] == 0.0);
  }
  // The robot discriminator is untouched and generically nonzero.
  const Tensor other = model.discriminate(Domain::Robot, random_window(rng, 27, 64));
  CHECK(other.data()[0] != 0.0);
}

TEST_CASE("clip features round trip through poses") {
  const DomainSpec spec(human_skeleton(), human_config());
  const Skeleton& skel = spec.skeleton();
  Rng rng(24);
  MotionClip clip{"probe", 0.02, {}};
  for (int f = 0; f < 10; ++f) clip.frames.push_back(random_pose(rng, skel));

  const Tensor features = spec.features_from_clip(clip);
  REQUIRE(features.dim(0) == 31);
  REQUIRE(features.dim(1) == 10);
  const std::vector<Pose> poses = spec.poses_from_features(features);
  REQUIRE(poses.size() == 10);
  for (size_t f = 0; f < poses.size(); ++f) {
    const Pose& in = clip.frames[f];
    const Pose& out = poses[f];
    CHECK(std::abs(in.root_translation.x - out.root_translation.x) < 1e-12);
    CHECK(std::abs(in.root_translation.y - out.root_translation.y) < 1e-12);
    CHECK(std::abs(in.root_translation.z - out.root_translation.z) < 1e-12);
    for (size_t j = 0; j < skel.joints.size(); ++j) {
      if (skel.joints[j].kind == JointKind::Actuated) {
        CHECK(Quat::angular_distance_deg(in.rotations[j], out.rotations[j]) < 1e-9);
      } else {
        CHECK(out.rotations[j].w == 1.0);  // identity for joints without rows
        CHECK(out.rotations[j].x == 0.0);
      }
    }
  }
}

TEST_CASE("mismatched part counts between domains are rejected") {
  SkeletonConfig merged = robot_config();
  for (auto& [name, part] : merged.parts)
    if (part == 4) part = 3;  // collapse to 4 parts
  Rng rng(25);
  CHECK_THROWS_AS(RetargetModel(DomainSpec(human_skeleton(), human_config()),
                                DomainSpec(robot_skeleton(), merged), ModelConfig{}, rng),
                  Error);
}
