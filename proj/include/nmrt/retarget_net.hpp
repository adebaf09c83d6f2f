#pragma once

#include <string>
#include <vector>

#include "nmrt/motion.hpp"
#include "nmrt/ops.hpp"
#include "nmrt/rng.hpp"
#include "nmrt/skeleton.hpp"
#include "nmrt/tensor.hpp"

namespace nmrt {

enum class Domain { Human = 0, Robot = 1 };

inline Domain other_domain(Domain d) { return d == Domain::Human ? Domain::Robot : Domain::Human; }
const char* domain_name(Domain d);

/// One block of feature rows: a quaternion unit (4 rows, w/x/y/z) for an
/// actuated joint, or the root-translation unit (3 rows, joint = -1).
struct FeatureUnit {
  int joint = -1;
  int row = 0;
  int width = 0;
};

/// Contiguous per-part slice of the feature rows. Units belonging to one body
/// part are laid out back to back so grouped convolutions can slice them.
struct PartBlock {
  int row = 0;
  int width = 0;
  int unit_begin = 0;
  int unit_count = 0;
};

/// Feature layout of one skeleton domain: F = 4 * (actuated joints) + 3 rows
/// per frame, grouped part-major. The root-translation unit lives at the end
/// of the root joint's part block.
class DomainSpec {
 public:
  DomainSpec() = default;
  /// Binds config onto the skeleton; throws if any part ends up empty.
  DomainSpec(const Skeleton& skeleton, const SkeletonConfig& config);

  const Skeleton& skeleton() const { return skel_; }
  const SkeletonConfig& config() const { return config_; }
  int feature_rows() const { return feature_rows_; }
  int part_count() const { return static_cast<int>(parts_.size()); }
  double height() const { return config_.height; }
  const std::vector<FeatureUnit>& units() const { return units_; }
  const std::vector<PartBlock>& parts() const { return parts_; }
  int unit_of_joint(int joint) const { return unit_of_joint_[static_cast<size_t>(joint)]; }
  int translation_row() const { return translation_row_; }
  /// Row spans of all quaternion units, for per-joint normalization.
  std::vector<RowSpan> quat_spans() const;

  /// Feature window [F, len] from clip frames [begin, begin+len).
  Tensor features_from_frames(const MotionClip& clip, int begin, int len) const;
  Tensor features_from_clip(const MotionClip& clip) const;
  /// Back-conversion; quaternions are normalized and canonicalized, joints
  /// without feature rows get identity rotations.
  std::vector<Pose> poses_from_features(const Tensor& features) const;
  MotionClip clip_from_features(const Tensor& features, std::string name,
                                double frame_time) const;
  /// Differentiable repack into the fk_positions row layout [4J+3, T];
  /// non-actuated joints contribute constant identity quaternion rows.
  Tensor pose_rows_from_features(const Tensor& features) const;

 private:
  Skeleton skel_;
  SkeletonConfig config_;
  std::vector<FeatureUnit> units_;
  std::vector<PartBlock> parts_;
  std::vector<int> unit_of_joint_;
  int feature_rows_ = 0;
  int translation_row_ = 0;
};

/// Per-channel normalization statistics, frozen before training.
struct DomainStats {
  std::vector<double> mean;
  std::vector<double> stdev;  // clamped >= 1e-6
};

/// Population mean/std per feature channel over all frames of all clips.
DomainStats compute_norm_stats(const DomainSpec& spec, const std::vector<MotionClip>& clips);

/// (x - mean) / std as a differentiable channel-wise affine map.
Tensor normalize_features(const Tensor& x, const DomainStats& stats);

/// Named trainable tensors in registration order (the checkpoint order).
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  Tensor add(const std::string& name, Tensor t);
};

/// Conv1d applied independently to row groups of the input; group g maps
/// rows [in_begin, in_begin+in_count) to out_count output rows. Outputs are
/// concatenated in group order.
class GroupedConv1d {
 public:
  struct Group {
    int in_begin = 0;
    int in_count = 0;
    int out_count = 0;
  };

  GroupedConv1d() = default;
  GroupedConv1d(const std::string& prefix, const std::vector<Group>& groups, int kernel,
                int stride, PadMode mode, ParamStore& store, Rng& rng);

  Tensor forward(const Tensor& x) const;
  int out_rows() const;

 private:
  std::vector<Group> groups_;
  std::vector<Tensor> weights_;  // [out, in, K] per group
  std::vector<Tensor> biases_;   // [out] per group
  int kernel_ = 1;
  int stride_ = 1;
  PadMode mode_ = PadMode::Reflect;
};

struct ModelConfig {
  int latent = 16;         // channels per body part in the shared latent
  int kernel = 15;         // temporal kernel size (odd)
  int disc_channels = 16;  // discriminator channels per part per block
  PadMode padding = PadMode::Reflect;
};

/// The paired encoder/decoder GAN. Both domains map into a shared part-level
/// latent [P*L, T/2]; per-domain grouped layers absorb the differing joint
/// counts. Parameter layout (names, order) is fixed by construction and is
/// the checkpoint contract.
class RetargetModel {
 public:
  RetargetModel(DomainSpec human, DomainSpec robot, ModelConfig cfg, Rng& rng);

  const DomainSpec& spec(Domain d) const { return spec_[idx(d)]; }
  const DomainStats& stats(Domain d) const { return stats_[idx(d)]; }
  void set_stats(Domain d, DomainStats stats);
  const ModelConfig& model_config() const { return cfg_; }
  int latent_rows() const;  // P * L

  /// Test-double switch: retarget/cycle become the identity map (domains must
  /// share a feature width). Persisted in checkpoints for CLI-level tests.
  void set_identity_double(bool v) { identity_double_ = v; }
  bool identity_double() const { return identity_double_; }

  /// window [F, T] normalized by domain stats, T even and >= 8 -> [P*L, T/2].
  Tensor encode(Domain d, const Tensor& window) const;
  /// latent [P*L, T/2] -> raw-feature window [F, T]: per-joint unit
  /// quaternions by construction, denormalized root translation.
  Tensor decode(Domain d, const Tensor& latent) const;
  /// Raw-feature window -> 0-d realness score (normalizes internally).
  Tensor discriminate(Domain d, const Tensor& window) const;
  /// Raw window in `from` -> raw window in the other domain; root translation
  /// additionally scaled by the target/source height ratio.
  Tensor retarget_window(Domain from, const Tensor& window) const;
  /// retarget_window there and back; defines the cycle reconstruction.
  Tensor cycle_window(Domain home, const Tensor& window) const;

  const std::vector<std::string>& param_names() const { return store_.names; }
  std::vector<Tensor>& params() { return store_.tensors; }
  const std::vector<Tensor>& params() const { return store_.tensors; }
  std::vector<Tensor> generator_params() const;
  std::vector<Tensor> discriminator_params(Domain d) const;

  const Tensor& pool_matrix(Domain d) const { return codec_[idx(d)].pool; }
  const Tensor& unpool_matrix(Domain d) const { return codec_[idx(d)].unpool; }

 private:
  static size_t idx(Domain d) { return static_cast<size_t>(d); }

  struct Codec {
    GroupedConv1d enc1, enc2, dec1, dec2;
    Tensor pool;    // [P*L, U*L], constant
    Tensor unpool;  // [U*L, P*L], constant
  };
  struct Disc {
    GroupedConv1d c1, c2, c3;
    Tensor head_w, head_b;
  };

  void check_window(Domain d, const Tensor& w, bool require_min_len) const;

  DomainSpec spec_[2];
  DomainStats stats_[2];
  ModelConfig cfg_;
  bool identity_double_ = false;
  ParamStore store_;
  Codec codec_[2];
  Disc disc_[2];
  size_t gen_param_count_ = 0;
  size_t disc_begin_[2] = {0, 0};
  size_t disc_count_[2] = {0, 0};
};

}  // namespace nmrt
