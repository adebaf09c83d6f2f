#pragma once

#include <vector>

#include "nmrt/tensor.hpp"

namespace nmrt {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. First/second-moment state is keyed by parameter
/// position, so the same parameter list (same order) must be passed every
/// step. Updates happen in place on the parameter buffers; tapes are immune
/// because ops snapshot their inputs.
class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}

  /// One update using d(loss)/d(param) pulled from a tape that already ran
  /// backward(). Parameters the loss never touched see a zero gradient.
  void step(std::vector<Tensor>& params, const Tape& tape);

  /// Same update from explicit gradients (grads[i] matches params[i]).
  void step_grads(std::vector<Tensor>& params, const std::vector<Tensor>& grads);

  long step_count() const { return t_; }
  const AdamOptions& options() const { return opt_; }

 private:
  AdamOptions opt_;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace nmrt
