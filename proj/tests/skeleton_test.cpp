#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmrt/errors.hpp"
#include "nmrt/skeleton.hpp"
#include "support.hpp"

using namespace nmrt;
using namespace nmrt::test;

namespace {

Skeleton four_joint_chain() {
  return make_chain({{"root", JointKind::Actuated, {0, 0, 0}, "ZXY"},
                     {"chest", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                     {"shoulder", JointKind::Actuated, {0, 0.25, 0}, "ZXY"},
                     {"hand_end", JointKind::EndEffector, {0, 0.25, 0}, "ZXY"}});
}

SkeletonConfig four_joint_config() {
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},
               {"chest", JointKind::Fixed},
               {"shoulder", JointKind::Actuated},
               {"hand_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0}, {"chest", 0}, {"shoulder", 1}, {"hand_end", 1}};
  cfg.end_effectors = {"hand_end", "hand_end", "hand_end"};
  cfg.height = 1.0;
  cfg.chest = "chest";
  return cfg;
}

}  // namespace

TEST_CASE("binding a config stamps kinds and parts onto the joints") {
  const Skeleton bound = bind_config(four_joint_chain(), four_joint_config());

  CHECK(bound.joints[0].kind == JointKind::Fixed);
  CHECK(bound.joints[1].kind == JointKind::Fixed);
  CHECK(bound.joints[2].kind == JointKind::Actuated);
  CHECK(bound.joints[3].kind == JointKind::EndEffector);
  CHECK(bound.joints[0].part == 0);
  CHECK(bound.joints[1].part == 0);
  CHECK(bound.joints[2].part == 1);
  CHECK(bound.joints[3].part == 1);
}

TEST_CASE("a config omitting a joint names it in the SchemaError") {
  SkeletonConfig cfg = four_joint_config();
  cfg.kinds.erase("shoulder");
  try {
    bind_config(four_joint_chain(), cfg);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::SchemaError);
    CHECK(std::string(e.what()).find("'shoulder'") != std::string::npos);
  }
}

TEST_CASE("a config naming an unknown joint raises UnknownJoint") {
  SkeletonConfig cfg = four_joint_config();
  cfg.kinds["phantom"] = JointKind::Actuated;
  try {
    bind_config(four_joint_chain(), cfg);
    FAIL("expected UnknownJoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::UnknownJoint);
    CHECK(std::string(e.what()).find("'phantom'") != std::string::npos);
  }
}

TEST_CASE("part ids with a gap raise a non-contiguous-parts SchemaError") {
  SkeletonConfig cfg = four_joint_config();
  cfg.parts = {{"root", 0}, {"chest", 0}, {"shoulder", 2}, {"hand_end", 2}};
  try {
    bind_config(four_joint_chain(), cfg);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::SchemaError);
    CHECK(std::string(e.what()).find("non-contiguous parts") != std::string::npos);
  }
}

TEST_CASE("rebinding the same config is idempotent") {
  const Skeleton once = bind_config(four_joint_chain(), four_joint_config());
  const Skeleton twice = bind_config(once, four_joint_config());
  REQUIRE(twice.joint_count() == once.joint_count());
  for (int i = 0; i < once.joint_count(); ++i) {
    CHECK(twice.joints[static_cast<size_t>(i)].kind == once.joints[static_cast<size_t>(i)].kind);
    CHECK(twice.joints[static_cast<size_t>(i)].part == once.joints[static_cast<size_t>(i)].part);
  }
}

TEST_CASE("guideline 3 ignores matched lengths and flags a 0.6 deviation") {
  const SkeletonConfig cfg = four_joint_config();
  const Skeleton equal_lengths = four_joint_chain();  // hand_end 0.25 vs shoulder 0.25

  CHECK(check_tpose_guidelines(equal_lengths, cfg, equal_lengths).empty());

  Skeleton short_hand = equal_lengths;
  short_hand.joints[3].offset = {0, 0.10, 0};
  const std::vector<Finding> findings = check_tpose_guidelines(short_hand, cfg, short_hand);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].guideline == Guideline::G3);
  CHECK(findings[0].joint_name == "hand_end");
  CHECK(findings[0].measure == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("guideline 2 compares dominant axes of chest links against the reference") {
  Skeleton skel = make_chain({{"root", JointKind::Actuated, {0, 0, 0}, "ZXY"},
                              {"chest", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                              {"neck", JointKind::Actuated, {0, 1.0, 0}, "ZXY"},
                              {"head_end", JointKind::EndEffector, {0, 1.0, 0}, "ZXY"}});
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},
               {"chest", JointKind::Fixed},
               {"neck", JointKind::Actuated},
               {"head_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0}, {"chest", 0}, {"neck", 1}, {"head_end", 1}};
  cfg.end_effectors = {"head_end", "head_end", "head_end"};
  cfg.chest = "chest";

  // (0,1,0) vs (0,0.9,0.1): dominant axis Y on both sides, no finding.
  Skeleton reference = skel;
  reference.joints[2].offset = {0, 0.9, 0.1};
  CHECK(check_tpose_guidelines(skel, cfg, reference).empty());

  // Reference link turned sideways: dominant axis X, one G2 finding.
  reference.joints[2].offset = {0.9, 0.1, 0};
  const std::vector<Finding> findings = check_tpose_guidelines(skel, cfg, reference);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].guideline == Guideline::G2);
  CHECK(findings[0].joint_name == "neck");
}

TEST_CASE("guideline 1 flags links whose dominant-axis share is below 70 percent") {
  Skeleton skel = four_joint_chain();
  skel.joints[2].offset = {0.145, 0.145, 0.145};  // share 1/sqrt(3) ~ 0.577
  skel.joints[3].offset = {0, 0.2511473969, 0};   // matches parent length
  const std::vector<Finding> findings =
      check_tpose_guidelines(skel, four_joint_config(), skel);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].guideline == Guideline::G1);
  CHECK(findings[0].joint_name == "shoulder");
  CHECK(findings[0].measure == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("an empty chest entry raises MissingChest") {
  SkeletonConfig cfg = four_joint_config();
  cfg.chest.clear();
  const Skeleton skel = four_joint_chain();
  try {
    check_tpose_guidelines(skel, cfg, skel);
    FAIL("expected MissingChest");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::MissingChest);
  }
}

TEST_CASE("findings arrive in joint-index order") {
  Skeleton skel = make_chain({{"root", JointKind::Actuated, {0, 0, 0}, "ZXY"},
                              {"chest", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                              {"arm", JointKind::Actuated, {0.3, 0.3, 0.3}, "ZXY"},
                              {"fore", JointKind::Actuated, {0.5, 0, 0}, "ZXY"},
                              {"tip_end", JointKind::EndEffector, {0.1, 0, 0}, "ZXY"}});
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},
               {"chest", JointKind::Fixed},
               {"arm", JointKind::Actuated},
               {"fore", JointKind::Actuated},
               {"tip_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0}, {"chest", 0}, {"arm", 1}, {"fore", 1}, {"tip_end", 1}};
  cfg.end_effectors = {"tip_end", "tip_end", "tip_end"};
  cfg.chest = "chest";

  const std::vector<Finding> findings = check_tpose_guidelines(skel, cfg, skel);
  REQUIRE(findings.size() == 2);
  CHECK(findings[0].guideline == Guideline::G1);  // arm link not axis-aligned
  CHECK(findings[0].joint == 2);
  CHECK(findings[1].guideline == Guideline::G3);  // tip_end 0.1 vs fore 0.5
  CHECK(findings[1].joint == 4);
  CHECK(findings[0].joint < findings[1].joint);

  // Determinism: a second run yields the identical list.
  const std::vector<Finding> again = check_tpose_guidelines(skel, cfg, skel);
  REQUIRE(again.size() == findings.size());
  for (size_t i = 0; i < findings.size(); ++i) {
    CHECK(again[i].guideline == findings[i].guideline);
    CHECK(again[i].joint == findings[i].joint);
    CHECK(again[i].measure == findings[i].measure);
    CHECK(again[i].message == findings[i].message);
  }
}

TEST_CASE("skeleton config JSON round trips and reports missing fields by path") {
  const SkeletonConfig cfg = four_joint_config();
  const SkeletonConfig back = skeleton_config_from_json_text(skeleton_config_to_json_text(cfg));
  CHECK(back.kinds == cfg.kinds);
  CHECK(back.parts == cfg.parts);
  CHECK(back.end_effectors.head == cfg.end_effectors.head);
  CHECK(back.height == cfg.height);
  CHECK(back.chest == cfg.chest);

  try {
    skeleton_config_from_json_text("{\"kinds\": {}}");
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::SchemaError);
    CHECK(std::string(e.what()).find("$.parts") != std::string::npos);
  }
  try {
    skeleton_config_from_json_text("not json");
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::SchemaError);
  }
}

TEST_CASE("skeleton validation rejects broken topology") {
  Skeleton skel = four_joint_chain();
  skel.joints[1].parent = 3;  // parent index above own index
  CHECK_THROWS_AS(skel.validate(), Error);

  Skeleton two_roots = four_joint_chain();
  two_roots.joints[1].parent = -1;
  CHECK_THROWS_AS(two_roots.validate(), Error);

  Skeleton ee_with_child = four_joint_chain();
  ee_with_child.joints[2].kind = JointKind::EndEffector;  // shoulder has a child
  CHECK_THROWS_AS(ee_with_child.validate(), Error);
}

TEST_CASE("topology_equal names the first differing joint") {
  const Skeleton a = four_joint_chain();
  Skeleton renamed = a;
  renamed.joints[2].name = "upper_arm";
  std::string why;
  CHECK_FALSE(Skeleton::topology_equal(a, renamed, &why));
  CHECK(why.find("shoulder") != std::string::npos);

  const Skeleton longer = make_chain({{"root", JointKind::Actuated, {0, 0, 0}, "ZXY"},
                                      {"chest", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                                      {"shoulder", JointKind::Actuated, {0, 0.25, 0}, "ZXY"},
                                      {"hand_end", JointKind::Actuated, {0, 0.25, 0}, "ZXY"},
                                      {"extra", JointKind::Actuated, {0, 0.1, 0}, "ZXY"}});
  why.clear();
  CHECK_FALSE(Skeleton::topology_equal(longer, a, &why));
  CHECK(why.find("'extra'") != std::string::npos);
}
