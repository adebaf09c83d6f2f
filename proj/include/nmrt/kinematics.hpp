#pragma once

#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/skeleton.hpp"
#include "nmrt/tensor.hpp"

namespace nmrt {

/// Joint positions for one pose. Only Actuated joints contribute a local
/// rotation; Fixed and EndEffector joints pass their parent's orientation
/// through unchanged. With root_local=true the root sits at the origin and
/// the pose's root translation is ignored.
std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Pose& pose,
                                     bool root_local = false);

/// forward_kinematics over every frame of a clip: [frame][joint].
std::vector<std::vector<Vec3>> motion_positions(const Skeleton& skel, const MotionClip& clip,
                                                bool root_local = false);

/// Number of rows fk_positions expects: 4 per joint plus 3 translation rows.
int pose_row_count(const Skeleton& skel);

/// Differentiable forward kinematics over feature columns.
///
/// pose_rows is [4J+3] or [4J+3, T]: four rows (w,x,y,z) per joint in
/// skeleton order, then three root-translation rows. Output is [3J] or
/// [3J, T] with x,y,z per joint. Actuated joints' quaternions are
/// L2-normalized inside the op; rows belonging to Fixed/EndEffector joints
/// (and the translation rows when root_local) are never read, so their
/// gradient is exactly zero. Forward values match forward_kinematics.
Tensor fk_positions(const Skeleton& skel, const Tensor& pose_rows, bool root_local);

/// Packs a pose into the fk_positions row layout (single column).
Tensor pose_to_rows(const Skeleton& skel, const Pose& pose);

}  // namespace nmrt
