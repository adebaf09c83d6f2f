#include "nmrt/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nmrt/errors.hpp"
#include <json.hpp>

namespace nmrt {

const char* joint_kind_name(JointKind k) {
  switch (k) {
    case JointKind::Actuated: return "Actuated";
    case JointKind::Fixed: return "Fixed";
    case JointKind::EndEffector: return "EndEffector";
  }
  return "?";
}

JointKind joint_kind_from_name(const std::string& s) {
  if (s == "Actuated") return JointKind::Actuated;
  if (s == "Fixed") return JointKind::Fixed;
  if (s == "EndEffector") return JointKind::EndEffector;
  fail(ErrKind::SchemaError, "unknown joint kind '" + s + "'");
}

const char* channel_kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::Xposition: return "Xposition";
    case ChannelKind::Yposition: return "Yposition";
    case ChannelKind::Zposition: return "Zposition";
    case ChannelKind::Xrotation: return "Xrotation";
    case ChannelKind::Yrotation: return "Yrotation";
    case ChannelKind::Zrotation: return "Zrotation";
  }
  return "?";
}

ChannelKind channel_kind_from_name(const std::string& s) {
  if (s == "Xposition") return ChannelKind::Xposition;
  if (s == "Yposition") return ChannelKind::Yposition;
  if (s == "Zposition") return ChannelKind::Zposition;
  if (s == "Xrotation") return ChannelKind::Xrotation;
  if (s == "Yrotation") return ChannelKind::Yrotation;
  if (s == "Zrotation") return ChannelKind::Zrotation;
  fail(ErrKind::SchemaError, "unknown channel kind '" + s + "'");
}

bool is_rotation_channel(ChannelKind k) {
  return k == ChannelKind::Xrotation || k == ChannelKind::Yrotation || k == ChannelKind::Zrotation;
}

int Skeleton::find_joint(const std::string& name) const {
  for (size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == name) return static_cast<int>(i);
  return -1;
}

void Skeleton::validate() const {
  if (joints.empty()) fail(ErrKind::SkeletonMismatch, "skeleton has no joints");
  int roots = 0;
  std::vector<bool> has_child(joints.size(), false);
  for (size_t i = 0; i < joints.size(); ++i) {
    const Joint& j = joints[i];
    if (j.parent < 0) {
      ++roots;
      if (static_cast<int>(i) != root_index)
        fail(ErrKind::SkeletonMismatch, "joint '" + j.name + "' has no parent but is not the root");
    } else {
      if (j.parent >= static_cast<int>(i))
        fail(ErrKind::SkeletonMismatch,
             "joint '" + j.name + "' is not in topological order (parent index >= own index)");
      has_child[static_cast<size_t>(j.parent)] = true;
    }
    // Rotation channels of one joint must be a permutation of distinct axes.
    bool seen[3] = {false, false, false};
    for (ChannelKind c : j.channels) {
      if (!is_rotation_channel(c)) continue;
      int a = (c == ChannelKind::Xrotation) ? 0 : (c == ChannelKind::Yrotation) ? 1 : 2;
      if (seen[a])
        fail(ErrKind::SkeletonMismatch, "joint '" + j.name + "' repeats a rotation channel axis");
      seen[a] = true;
    }
  }
  if (roots != 1) fail(ErrKind::SkeletonMismatch, "skeleton must have exactly one root");
  for (size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].kind == JointKind::EndEffector && has_child[i])
      fail(ErrKind::SkeletonMismatch,
           "end-effector joint '" + joints[i].name + "' must be a leaf");
  }
}

bool Skeleton::topology_equal(const Skeleton& a, const Skeleton& b, std::string* why) {
  auto differs = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.joints.size() != b.joints.size()) {
    std::string msg = "joint counts differ (" + std::to_string(a.joints.size()) + " vs " +
                      std::to_string(b.joints.size()) + ")";
    // Name the first structural difference so the caller can point at a joint.
    const size_t common = std::min(a.joints.size(), b.joints.size());
    size_t i = 0;
    while (i < common && a.joints[i].name == b.joints[i].name) ++i;
    if (i < common)
      msg += "; first mismatched joint '" + a.joints[i].name + "' vs '" + b.joints[i].name + "'";
    else if (common < std::max(a.joints.size(), b.joints.size()))
      msg += "; first extra joint '" +
             (a.joints.size() > b.joints.size() ? a.joints[common].name : b.joints[common].name) +
             "'";
    return differs(msg);
  }
  for (size_t i = 0; i < a.joints.size(); ++i) {
    const Joint& ja = a.joints[i];
    const Joint& jb = b.joints[i];
    if (ja.name != jb.name)
      return differs("joint " + std::to_string(i) + " name differs ('" + ja.name + "' vs '" +
                     jb.name + "')");
    if (ja.parent != jb.parent) return differs("joint '" + ja.name + "' parent differs");
    if (ja.channels != jb.channels)
      return differs("joint '" + ja.name + "' channel order differs");
    if (ja.end_site != jb.end_site) return differs("joint '" + ja.name + "' end-site flag differs");
  }
  return true;
}

int SkeletonConfig::part_count() const {
  int max_part = -1;
  for (const auto& [name, p] : parts) max_part = std::max(max_part, p);
  return max_part + 1;
}

namespace {

using nlohmann::json;

json require_field(const json& j, const char* field, const char* path) {
  if (!j.contains(field))
    fail(ErrKind::SchemaError, std::string("missing field at ") + path);
  return j.at(field);
}

}  // namespace

SkeletonConfig skeleton_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  SkeletonConfig cfg;
  json kinds = require_field(j, "kinds", "$.kinds");
  if (!kinds.is_object()) fail(ErrKind::SchemaError, "$.kinds must be an object");
  for (auto it = kinds.begin(); it != kinds.end(); ++it) {
    if (!it.value().is_string())
      fail(ErrKind::SchemaError, "$.kinds['" + it.key() + "'] must be a string");
    cfg.kinds[it.key()] = joint_kind_from_name(it.value().get<std::string>());
  }
  json parts = require_field(j, "parts", "$.parts");
  if (!parts.is_object()) fail(ErrKind::SchemaError, "$.parts must be an object");
  for (auto it = parts.begin(); it != parts.end(); ++it) {
    if (!it.value().is_number_integer())
      fail(ErrKind::SchemaError, "$.parts['" + it.key() + "'] must be an integer");
    cfg.parts[it.key()] = it.value().get<int>();
  }
  json ee = require_field(j, "end_effectors", "$.end_effectors");
  cfg.end_effectors.head = require_field(ee, "head", "$.end_effectors.head").get<std::string>();
  cfg.end_effectors.left_hand =
      require_field(ee, "left_hand", "$.end_effectors.left_hand").get<std::string>();
  cfg.end_effectors.right_hand =
      require_field(ee, "right_hand", "$.end_effectors.right_hand").get<std::string>();
  json height = require_field(j, "height", "$.height");
  if (!height.is_number()) fail(ErrKind::SchemaError, "$.height must be a number");
  cfg.height = height.get<double>();
  if (!(cfg.height > 0.0)) fail(ErrKind::SchemaError, "$.height must be positive");
  if (j.contains("tpose_tolerances")) {
    json t = j.at("tpose_tolerances");
    if (t.contains("length_ratio")) cfg.tpose_tolerances.length_ratio = t.at("length_ratio").get<double>();
    if (t.contains("axis_ratio")) cfg.tpose_tolerances.axis_ratio = t.at("axis_ratio").get<double>();
  }
  if (j.contains("chest")) cfg.chest = j.at("chest").get<std::string>();
  return cfg;
}

SkeletonConfig load_skeleton_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrKind::IoError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return skeleton_config_from_json_text(ss.str());
}

std::string skeleton_config_to_json_text(const SkeletonConfig& config) {
  json j;
  for (const auto& [name, kind] : config.kinds) j["kinds"][name] = joint_kind_name(kind);
  for (const auto& [name, part] : config.parts) j["parts"][name] = part;
  j["end_effectors"]["head"] = config.end_effectors.head;
  j["end_effectors"]["left_hand"] = config.end_effectors.left_hand;
  j["end_effectors"]["right_hand"] = config.end_effectors.right_hand;
  j["height"] = config.height;
  j["tpose_tolerances"]["length_ratio"] = config.tpose_tolerances.length_ratio;
  j["tpose_tolerances"]["axis_ratio"] = config.tpose_tolerances.axis_ratio;
  if (!config.chest.empty()) j["chest"] = config.chest;
  return j.dump(2);
}

Skeleton bind_config(const Skeleton& skeleton, const SkeletonConfig& config) {
  skeleton.validate();
  Skeleton out = skeleton;

  for (const auto& [name, kind] : config.kinds) {
    (void)kind;
    if (out.find_joint(name) < 0)
      fail(ErrKind::UnknownJoint, "kind assignment names joint '" + name + "' absent from skeleton");
  }
  for (const auto& [name, part] : config.parts) {
    (void)part;
    if (out.find_joint(name) < 0)
      fail(ErrKind::UnknownJoint, "part mapping names joint '" + name + "' absent from skeleton");
  }
  for (Joint& j : out.joints) {
    auto kit = config.kinds.find(j.name);
    if (kit == config.kinds.end())
      fail(ErrKind::SchemaError, "config omits joint '" + j.name + "' from kind assignment");
    j.kind = kit->second;
    auto pit = config.parts.find(j.name);
    if (pit == config.parts.end())
      fail(ErrKind::SchemaError, "config omits joint '" + j.name + "' from part mapping");
    j.part = pit->second;
  }

  // Part ids must form a contiguous 0..P-1 range.
  std::set<int> used;
  for (const Joint& j : out.joints) used.insert(j.part);
  int expect = 0;
  for (int p : used) {
    if (p != expect)
      fail(ErrKind::SchemaError, "non-contiguous parts: part ids must form 0..P-1, got gap at " +
                                     std::to_string(expect));
    ++expect;
  }

  for (const std::string& name : {config.end_effectors.head, config.end_effectors.left_hand,
                                  config.end_effectors.right_hand}) {
    if (out.find_joint(name) < 0)
      fail(ErrKind::UnknownJoint, "end-effector entry names joint '" + name + "' absent from skeleton");
  }
  if (!config.chest.empty() && out.find_joint(config.chest) < 0)
    fail(ErrKind::UnknownJoint, "chest entry names joint '" + config.chest + "' absent from skeleton");

  out.validate();
  return out;
}

namespace {

int dominant_axis(const Vec3& v) {
  double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
  if (ax >= ay && ax >= az) return 0;
  return ay >= az ? 1 : 2;
}

constexpr double kZeroLink = 1e-12;

}  // namespace

std::vector<Finding> check_tpose_guidelines(const Skeleton& skeleton,
                                            const SkeletonConfig& config,
                                            const Skeleton& reference) {
  Skeleton sk = bind_config(skeleton, config);
  reference.validate();
  if (config.chest.empty())
    fail(ErrKind::MissingChest, "config names no chest joint for the guideline checks");
  int chest = sk.find_joint(config.chest);
  if (chest < 0)
    fail(ErrKind::MissingChest, "chest joint '" + config.chest + "' not found in skeleton");

  std::vector<Finding> findings;
  for (int i = 0; i < sk.joint_count(); ++i) {
    const Joint& j = sk.joints[static_cast<size_t>(i)];
    double len = j.offset.norm();

    // G1: actuated-joint links should align to a dominant axis in T-pose.
    if (j.kind == JointKind::Actuated && len > kZeroLink) {
      double dom = std::abs(j.offset[dominant_axis(j.offset)]);
      double ratio = dom / len;
      if (ratio < config.tpose_tolerances.axis_ratio) {
        findings.push_back({Guideline::G1, i, j.name, ratio,
                            "link into '" + j.name + "' is not axis-aligned (dominant-axis share " +
                                std::to_string(ratio) + ")"});
      }
    }

    // G2: links leaving the chest should point the same way as in the
    // reference skeleton (correspondence by joint name).
    if (j.parent == chest && len > kZeroLink) {
      int ref_idx = reference.find_joint(j.name);
      if (ref_idx >= 0) {
        const Vec3& ref_off = reference.joints[static_cast<size_t>(ref_idx)].offset;
        if (ref_off.norm() > kZeroLink && dominant_axis(j.offset) != dominant_axis(ref_off)) {
          findings.push_back({Guideline::G2, i, j.name, 0.0,
                              "chest link to '" + j.name +
                                  "' points along a different dominant axis than the reference"});
        }
      }
    }

    // G3: an end-effector should sit at a distance equal to the length of its
    // preceding parent link.
    if (j.kind == JointKind::EndEffector && j.parent >= 0) {
      const Joint& parent = sk.joints[static_cast<size_t>(j.parent)];
      double parent_len = parent.offset.norm();
      if (parent_len > kZeroLink) {
        double dev = std::abs(len - parent_len) / parent_len;
        if (dev > config.tpose_tolerances.length_ratio) {
          findings.push_back({Guideline::G3, i, j.name, dev,
                              "end-effector '" + j.name + "' offset length deviates from its parent link by " +
                                  std::to_string(dev * 100.0) + "%"});
        }
      }
    }
  }
  return findings;
}

}  // namespace nmrt
