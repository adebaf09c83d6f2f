#pragma once

#include <string>
#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/skeleton.hpp"

namespace nmrt {

struct ChannelSpec {
  int joint_index = 0;
  ChannelKind kind = ChannelKind::Xrotation;

  bool operator==(const ChannelSpec&) const = default;
};

/// A parsed BVH file: hierarchy plus the raw frame table. Translation values
/// are in skeleton length units, rotations in degrees. End Sites are
/// materialized as joints named "<parent>_end" with zero channels so that
/// end-effector offsets participate in forward kinematics.
struct BvhDocument {
  Skeleton skeleton;
  std::vector<ChannelSpec> channels;        // column order of the frame table
  std::vector<std::vector<double>> frames;  // rows = frames
  double frame_time = 1.0 / 50.0;

  int channel_count() const { return static_cast<int>(channels.size()); }
  int frame_count() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

/// Parses BVH text. Never crashes on arbitrary bytes: returns a document or
/// throws a structured Error (MissingSection, ChannelMismatch with line
/// number, MalformedNumber with line number, UnbalancedBraces, BadEncoding).
/// Input must be UTF-8.
BvhDocument parse_bvh(const std::string& text);
BvhDocument parse_bvh_file(const std::string& path);

/// Canonical two-space-indented output. Frame values are printed with the
/// requested number of decimal places; offsets and the frame time use the
/// shortest round-trip decimal form.
std::string write_bvh(const BvhDocument& doc, int precision = 6);
void write_bvh_file(const BvhDocument& doc, const std::string& path, int precision = 6);

/// Frame table -> quaternion poses. Root position channels become the root
/// translation; rotation channels are composed in declared order. Position
/// channels on non-root joints are ignored (links are rigid).
MotionClip clip_from_document(const BvhDocument& doc, const std::string& name);

/// Poses -> frame table, using the skeleton's declared channels.
BvhDocument document_from_clip(const Skeleton& skeleton, const MotionClip& clip);

struct MotionDirResult {
  std::vector<MotionClip> clips;  // lexicographic filename order
  std::vector<std::string> warnings;
};

/// Loads every *.bvh file under `path`. Each file must be topology-identical
/// to `expected`; offsets may deviate by at most 1e-4 per component (recorded
/// as a warning). Parse errors propagate with the filename attached.
MotionDirResult load_motion_dir(const std::string& path, const Skeleton& expected);

}  // namespace nmrt
