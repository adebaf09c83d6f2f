#pragma once

#include <string>
#include <vector>

#include "nmrt/rotation.hpp"

namespace nmrt {

/// One frame of motion: root translation plus a rotation per skeleton joint.
/// Rotations of Fixed and EndEffector joints are carried but never influence
/// forward kinematics.
struct Pose {
  Vec3 root_translation;
  std::vector<Quat> rotations;
};

struct MotionClip {
  std::string name;
  double frame_time = 0.02;  // seconds per frame, 50 Hz default
  std::vector<Pose> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

inline long total_frames(const std::vector<MotionClip>& clips) {
  long n = 0;
  for (const MotionClip& c : clips) n += c.frame_count();
  return n;
}

}  // namespace nmrt
