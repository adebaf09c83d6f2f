#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nmrt/rng.hpp"
#include "nmrt/tensor.hpp"

namespace nmrt {

struct GradCheckResult {
  std::string name;
  int draws = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Checks d(f)/d(leaf) for every element of every leaf against central
/// finite differences with step h. Relative error uses
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
/// One call = one draw; results accumulate into *result.
void check_gradients_once(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          std::vector<Tensor>& leaves, double h, GradCheckResult* result);

/// Like check_gradients_once, but finite-differences only `samples` randomly
/// chosen (leaf, element) positions — for parameter-heavy composite paths.
void check_gradients_sampled(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                             std::vector<Tensor>& leaves, double h, Rng& rng, int samples,
                             GradCheckResult* result);

/// The complete gradient-check suite: every differentiable primitive, the
/// forward-kinematics op, the full generator path and both training losses.
/// `draws` is the per-check draw count (the acceptance bar is 100).
std::vector<GradCheckResult> run_gradcheck_suite(unsigned long long seed, int draws,
                                                 std::ostream* log = nullptr);

}  // namespace nmrt
