#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles here
// deliberately re-derive results through a different computation path than
// the library (homogeneous-transform FK, axis-matrix rotation composition,
// double-loop metrics) so agreement is evidence, not tautology.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/retarget_net.hpp"
#include "nmrt/rng.hpp"
#include "nmrt/rotation.hpp"
#include "nmrt/skeleton.hpp"

namespace nmrt::test {

/// Named BVH texts covering nested joints, End Sites, three rotation orders,
/// all six channel kinds, scientific notation and a 0-frame file.
std::vector<std::pair<std::string, std::string>> bvh_corpus();

/// 3x3 rotation matrix about one axis, degrees (test-side implementation).
Mat3 axis_matrix(Axis axis, double deg);
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
/// Standard quaternion-to-matrix formula, written out locally.
Mat3 quat_matrix(const Quat& q);
double mat3_max_abs_diff(const Mat3& a, const Mat3& b);

/// Forward kinematics via a chain of 4x4 homogeneous transforms.
std::vector<Vec3> fk_oracle(const Skeleton& skel, const Pose& pose, bool root_local);

/// Uniform random unit quaternion (4-cube rejection + normalize).
Quat random_quat(Rng& rng);
/// Random pose: random rotations everywhere, random root translation.
Pose random_pose(Rng& rng, const Skeleton& skel);

struct ChainJoint {
  std::string name;
  JointKind kind = JointKind::Actuated;
  Vec3 offset;
  std::string order = "ZXY";  // ignored for end-effector leaves
};

/// Single chain, joint i parented to i-1; the root gets position channels.
/// EndEffector entries become channel-less end-site leaves.
Skeleton make_chain(const std::vector<ChainJoint>& spec);

/// The acceptance chain: six joints covering all three kinds and all three
/// corpus rotation orders.
Skeleton mixed_chain6();

/// Fresh empty directory under the system temp root.
std::string make_temp_dir(const std::string& tag);

/// Minimal two-domain world shared by the model/training/evaluation tests:
/// a 4-joint "human" chain and a 5-joint "robot" chain over two body parts.
DomainSpec tiny_human_spec();
DomainSpec tiny_robot_spec();
/// latent 4, kernel 3, discriminator channels 4 — small enough for tests.
ModelConfig tiny_model_config();
RetargetModel tiny_world_model(unsigned long long seed);

/// Smooth synthetic motion: per-joint sinusoidal axis rotations plus a
/// sinusoidal root path; deterministic in (skeleton, seed).
MotionClip sine_clip(const Skeleton& skeleton, const std::string& name, int frames,
                     unsigned long long seed);

}  // namespace nmrt::test
