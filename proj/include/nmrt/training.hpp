#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nmrt/retarget_net.hpp"

namespace nmrt {

struct TrainConfig {
  unsigned long long seed = 42;
  int window = 64;  // frames per training window (T), even and >= 8
  int stride = 32;
  int batch = 8;
  int epochs = 1;
  double lr_gen = 1e-4;
  double lr_disc = 1e-4;
  double w_adv = 1.0;
  double w_cycle = 10.0;
  double w_fk = 5.0;
  double w_latent = 1.0;
  PadMode padding = PadMode::Reflect;
  int checkpoint_interval = 500;  // steps between ckpt_<step>.nmrt files; 0 = final only
  int max_steps = 0;              // optional hard step cap; 0 = run all epochs

  void validate() const;  // throws ConfigInvalid
};

TrainConfig train_config_from_json_text(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json_text(const TrainConfig& config);

/// Applies one "key=value" style override (key and value already split).
/// Accepts "window.T" as an alias for "window". Throws SchemaError on unknown
/// keys, MalformedNumber on bad values.
void apply_config_override(TrainConfig* config, const std::string& key, const std::string& value);

/// One training window: frames [start, start + T) of clips[clip].
struct WindowRef {
  int clip = 0;
  int start = 0;
};

/// Window starts 0, stride, 2*stride, ... while start + T <= N. Clips shorter
/// than T are skipped with a warning appended to *warnings.
std::vector<WindowRef> make_windows(const std::vector<MotionClip>& clips, int T, int stride,
                                    std::vector<std::string>* warnings = nullptr);

/// Frozen training-set view: per-domain window indices and normalization
/// stats, computed once before any step.
struct DatasetView {
  std::vector<WindowRef> windows[2];  // indexed by Domain
  DomainStats stats[2];
};

DatasetView build_dataset(const DomainSpec& human, const std::vector<MotionClip>& human_clips,
                          const DomainSpec& robot, const std::vector<MotionClip>& robot_clips,
                          int T, int stride, std::vector<std::string>* warnings = nullptr);

/// Generator loss value plus the weighted per-term breakdown for logging.
struct GenLossTerms {
  Tensor total;  // 0-d, lives on the active tape
  double adv = 0.0;
  double cycle = 0.0;
  double fk = 0.0;
  double latent = 0.0;
};

/// LSGAN + cycle + FK + latent-consistency loss over raw (unnormalized)
/// windows; each model op normalizes internally where needed. Quaternion
/// blocks in the cycle term are compared up to sign (double cover).
GenLossTerms generator_loss(const RetargetModel& model, const std::vector<Tensor>& batch_h,
                            const std::vector<Tensor>& batch_r, double w_adv, double w_cycle,
                            double w_fk, double w_latent);

/// mean[(C(real) - 1)^2] + mean[C(fake)^2]; fake windows must be detached
/// (built outside any tape scope).
Tensor discriminator_loss(const RetargetModel& model, Domain d, const std::vector<Tensor>& real,
                          const std::vector<Tensor>& fake);

struct TrainResult {
  int steps = 0;
  std::string losses_path;
  std::string checkpoint_path;  // final checkpoint
};

/// Full training loop: builds the model from config.seed, freezes stats,
/// then per step runs one Adam update per discriminator followed by one
/// generator update. Writes out_dir/losses.csv (round-trip-exact decimals)
/// and periodic checkpoints. Identical config + corpora => bitwise-identical
/// losses.csv.
RetargetModel train(const TrainConfig& config, const DomainSpec& human,
                    const std::vector<MotionClip>& human_clips, const DomainSpec& robot,
                    const std::vector<MotionClip>& robot_clips, const std::string& out_dir,
                    TrainResult* result = nullptr, std::ostream* log = nullptr);

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

}  // namespace nmrt
