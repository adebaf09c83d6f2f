#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nmrt/rotation.hpp"

namespace nmrt {

/// Three-way joint classification driving the forward-kinematics semantics:
/// only Actuated joints contribute rotations; Fixed joints (root, chest) and
/// EndEffector markers are structural and never rotate.
enum class JointKind { Actuated, Fixed, EndEffector };

const char* joint_kind_name(JointKind k);
JointKind joint_kind_from_name(const std::string& s);

enum class ChannelKind {
  Xposition,
  Yposition,
  Zposition,
  Xrotation,
  Yrotation,
  Zrotation,
};

const char* channel_kind_name(ChannelKind k);
ChannelKind channel_kind_from_name(const std::string& s);
bool is_rotation_channel(ChannelKind k);

struct Joint {
  std::string name;
  int parent = -1;  // -1 for the root
  Vec3 offset;      // from parent, in T-pose, skeleton length units
  JointKind kind = JointKind::Actuated;
  std::vector<ChannelKind> channels;        // declared BVH channels, in order
  std::optional<AxisTriple> rotation_order; // derived from rotation channels
  bool end_site = false;                    // materialized BVH "End Site"
  int part = -1;                            // body-part id once a config is bound
};

/// Joint hierarchy in topological order (parent index < child index).
struct Skeleton {
  std::vector<Joint> joints;
  int root_index = 0;

  int joint_count() const { return static_cast<int>(joints.size()); }
  int find_joint(const std::string& name) const;  // -1 when absent

  /// Throws SkeletonMismatch when structural invariants are violated.
  void validate() const;

  /// Same joint names, parents, kinds-irrelevant channel orders.
  static bool topology_equal(const Skeleton& a, const Skeleton& b, std::string* why = nullptr);
};

struct EndEffectorNames {
  std::string head;
  std::string left_hand;
  std::string right_hand;
};

struct TposeTolerances {
  double length_ratio = 0.1;  // guideline 3: end-effector vs parent link length
  double axis_ratio = 0.7;    // guideline 1: dominant-axis share of offset norm
};

/// Per-skeleton configuration: joint kinds, body-part mapping for skeleton
/// pooling, metric end-effectors and character height.
struct SkeletonConfig {
  std::map<std::string, JointKind> kinds;
  std::map<std::string, int> parts;
  EndEffectorNames end_effectors;
  double height = 1.0;
  TposeTolerances tpose_tolerances;
  std::string chest;  // optional; required by the T-pose guideline checks

  int part_count() const;
};

SkeletonConfig load_skeleton_config(const std::string& path);
SkeletonConfig skeleton_config_from_json_text(const std::string& text);
std::string skeleton_config_to_json_text(const SkeletonConfig& config);

/// Applies kind and part assignments onto the skeleton joints. Every joint
/// must be covered exactly once and part ids must form a contiguous 0..P-1
/// range. Idempotent. Throws SchemaError / UnknownJoint.
Skeleton bind_config(const Skeleton& skeleton, const SkeletonConfig& config);

enum class Guideline { G1, G2, G3 };

struct Finding {
  Guideline guideline;
  int joint = -1;
  std::string joint_name;
  double measure = 0.0;  // deviation ratio (G1, G3) or 0 (G2)
  std::string message;
};

/// Lints a bound skeleton against the T-pose layout guidelines. Findings are
/// warnings in joint-index order, not errors. The reference skeleton supplies
/// the chest-link orientations for guideline 2.
std::vector<Finding> check_tpose_guidelines(const Skeleton& skeleton,
                                            const SkeletonConfig& config,
                                            const Skeleton& reference);

}  // namespace nmrt
