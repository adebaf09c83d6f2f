#pragma once

#include <map>
#include <string>
#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/retarget_net.hpp"
#include "nmrt/skeleton.hpp"

namespace nmrt {

/// Mean over frames and non-root joints of the Euclidean distance between
/// root-local forward-kinematics positions, scaled to millimeters.
double mean_joint_position_error(const Skeleton& skel, const MotionClip& a, const MotionClip& b,
                                 double unit_scale_mm);

/// One named end-effector pairing across two skeletons.
struct EeMapEntry {
  std::string key;      // head / left_hand / right_hand
  std::string joint_a;  // joint name in skeleton a
  std::string joint_b;  // joint name in skeleton b
};

/// Identity pairing derived from two configs' end-effector declarations.
std::vector<EeMapEntry> ee_map_from_configs(const SkeletonConfig& a, const SkeletonConfig& b);

/// Per-end-effector mean root-local position distance in centimeters.
/// Frame counts must already match (resample upstream otherwise).
std::map<std::string, double> end_effector_errors(const Skeleton& skel_a, const MotionClip& a,
                                                  const Skeleton& skel_b, const MotionClip& b,
                                                  const std::vector<EeMapEntry>& ee_map,
                                                  double unit_scale_cm);

/// Nearest-frame resampling to exactly `frames` frames (endpoints aligned).
MotionClip resample_nearest(const MotionClip& clip, int frames);

struct MotionMetrics {
  std::string name;
  long frames = 0;
  double mjpe_mm = 0.0;
  std::map<std::string, double> ee_cm;

  bool operator==(const MotionMetrics&) const = default;
};

/// Cycle-evaluation / comparison results. `aggregate` pools all frames;
/// per-motion rows carry each clip's own mean. `reference_json` optionally
/// embeds the published full-scale reference constants verbatim.
struct MetricsReport {
  MotionMetrics aggregate;  // name "aggregate", frames = total
  std::vector<MotionMetrics> per_motion;
  double unit_scale_mm = 10.0;
  std::string reference_json;  // serialized JSON object, empty = absent

  bool operator==(const MetricsReport&) const = default;
};

/// Published full-scale reference constants (cycle errors in mm, Table-style
/// per-motion end-effector errors in cm for both methods), as a JSON object
/// suitable for MetricsReport::reference_json.
std::string reference_constants_json();

/// Tiles each clip with stride-T windows (tail processed as one final
/// end-aligned window, overlap resolved in favor of the later window), runs
/// the model's cycle map, reassembles, and scores against the source. Clips
/// shorter than `window` are skipped with a warning.
MetricsReport cycle_evaluate(const RetargetModel& model, Domain home,
                             const std::vector<MotionClip>& clips, int window,
                             double unit_scale_mm, std::vector<std::string>* warnings = nullptr);

/// The reassembled cycle reconstruction for one clip (exposed for tests and
/// for writing the reconstructed BVH).
MotionClip cycle_reconstruct(const RetargetModel& model, Domain home, const MotionClip& clip,
                             int window);

/// One-way retarget of a whole clip. The clip is processed as a single
/// window (rounded down to an even frame count, the odd tail covered by a
/// second end-aligned window that wins on overlap); frame count and frame
/// time are preserved. Identity-double checkpoints reproduce the input
/// exactly at any length; otherwise at least 8 frames are required.
MotionClip retarget_clip(const RetargetModel& model, Domain from, const MotionClip& clip);

/// Frame-weighted pooling of per-motion rows into one "aggregate" row.
MotionMetrics pool_metrics(const std::vector<MotionMetrics>& rows);

std::string report_to_json_text(const MetricsReport& report);
MetricsReport report_from_json_text(const std::string& text);
void write_report(const MetricsReport& report, const std::string& path);
MetricsReport read_report(const std::string& path);

/// Aligned text table: per-motion rows, Head / L.Hand / R.Hand columns, one
/// column block per method when the reference constants are embedded.
std::string render_report_table(const MetricsReport& report);

}  // namespace nmrt
