#pragma once

#include <string>
#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/skeleton.hpp"

namespace nmrt {

/// Parameters for the deterministic paired-skeleton corpus generator. Domain
/// B ("robot") reuses domain A's topology with limb lengths scaled and one
/// extra actuated wrist joint splitting each forearm link.
struct FixtureSpec {
  unsigned long long seed = 42;
  int motions = 20;
  int frames = 200;
  double limb_scale = 1.3;
  double frame_rate = 50.0;  // Hz
  double freq_lo = 0.2;      // sinusoid band, Hz
  double freq_hi = 1.5;
  double amp_lo_deg = 5.0;  // per-channel sinusoid amplitude bounds
  double amp_hi_deg = 20.0;

  void validate() const;  // throws ConfigInvalid
};

FixtureSpec fixture_spec_from_json_text(const std::string& text);
FixtureSpec load_fixture_spec(const std::string& path);
std::string fixture_spec_to_json_text(const FixtureSpec& spec);

struct FixtureDomain {
  Skeleton skeleton;
  SkeletonConfig config;
  std::vector<MotionClip> clips;
};

struct Fixture {
  FixtureDomain human;
  FixtureDomain robot;
};

Skeleton fixture_human_skeleton();
Skeleton fixture_robot_skeleton(double limb_scale);
SkeletonConfig fixture_human_config();
SkeletonConfig fixture_robot_config();

/// Deterministic corpora: joint angles are seeded two-term sinusoid sums,
/// quaternion trajectories stay sign-continuous, clips are BVH-writable at
/// the spec frame rate.
Fixture make_fixture(const FixtureSpec& spec);

/// Writes {human/, robot/} x {motion_<NN>.bvh, skeleton_config.json}.
void write_fixture(const Fixture& fixture, const std::string& out_dir);

}  // namespace nmrt
