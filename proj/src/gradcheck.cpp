#include "nmrt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nmrt/errors.hpp"
#include "nmrt/kinematics.hpp"
#include "nmrt/ops.hpp"
#include "nmrt/retarget_net.hpp"
#include "nmrt/training.hpp"

namespace nmrt {
namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

struct Probe {
  std::vector<Tensor> grads;
  double worst = 0.0;
};

Probe analytic_pass(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                    std::vector<Tensor>& leaves) {
  for (Tensor& l : leaves) l.set_requires_grad(true);
  Probe probe;
  Tape tape;
  {
    TapeScope scope(&tape);
    Tensor loss = f(leaves);
    tape.backward(loss);
  }
  for (Tensor& l : leaves) probe.grads.push_back(tape.grad(l));
  return probe;
}

double fd_at(const std::function<Tensor(const std::vector<Tensor>&)>& f,
             std::vector<Tensor>& leaves, size_t leaf, long elem, double h) {
  double* p = leaves[leaf].data();
  const double keep = p[elem];
  p[elem] = keep + h;
  const double lp = f(leaves).value();
  p[elem] = keep - h;
  const double lm = f(leaves).value();
  p[elem] = keep;
  return (lp - lm) / (2.0 * h);
}

}  // namespace

void check_gradients_once(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          std::vector<Tensor>& leaves, double h, GradCheckResult* result) {
  Probe probe = analytic_pass(f, leaves);
  for (size_t i = 0; i < leaves.size(); ++i) {
    const double* g = probe.grads[i].data();
    for (long k = 0; k < leaves[i].numel(); ++k) {
      const double num = fd_at(f, leaves, i, k, h);
      result->max_rel_err = std::max(result->max_rel_err, rel_err(g[k], num));
    }
  }
  ++result->draws;
}

void check_gradients_sampled(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                             std::vector<Tensor>& leaves, double h, Rng& rng, int samples,
                             GradCheckResult* result) {
  Probe probe = analytic_pass(f, leaves);
  for (int s = 0; s < samples; ++s) {
    const size_t i = static_cast<size_t>(rng.uniform_int(static_cast<int>(leaves.size())));
    const long k = rng.uniform_int(static_cast<int>(leaves[i].numel()));
    const double num = fd_at(f, leaves, i, k, h);
    // Central differences at two step sizes must agree for a smooth path.
    // Disagreement means the perturbation straddles a kink (leaky_relu zero
    // crossing); such samples say nothing about the backward pass, so skip
    // them. A wrong analytic gradient stays self-consistent across step
    // sizes and is still caught.
    const double num2 = fd_at(f, leaves, i, k, 2.0 * h);
    if (std::abs(num - num2) > 1e-5 * std::max(1.0, std::abs(num))) continue;
    result->max_rel_err =
        std::max(result->max_rel_err, rel_err(probe.grads[i].data()[k], num));
  }
  ++result->draws;
}

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolPrimitive = 1e-4;
constexpr double kTolComposite = 1e-3;

Tensor rand_tensor(Rng& rng, std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  double* p = t.data();
  for (long i = 0; i < t.numel(); ++i) p[i] = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from zero, for kinked ops (leaky_relu).
Tensor rand_tensor_nonzero(Rng& rng, std::vector<int> shape, double margin) {
  Tensor t(std::move(shape));
  double* p = t.data();
  for (long i = 0; i < t.numel(); ++i) {
    const double mag = rng.uniform(margin, 1.0);
    p[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

/// Weighted sum turns any-shaped op output into a scalar loss that mixes
/// every output element.
std::function<Tensor(const std::vector<Tensor>&)> weighted(
    Tensor w, std::function<Tensor(const std::vector<Tensor>&)> op) {
  return [w = std::move(w), op = std::move(op)](const std::vector<Tensor>& leaves) {
    return sum_all(mul(op(leaves), w));
  };
}

/// Random feature window with well-conditioned quaternion blocks.
Tensor rand_window(Rng& rng, const DomainSpec& spec, int t_len) {
  Tensor w({spec.feature_rows(), t_len});
  double* p = w.data();
  for (const FeatureUnit& u : spec.units()) {
    for (int t = 0; t < t_len; ++t) {
      const long base = static_cast<long>(u.row) * t_len + t;
      if (u.joint >= 0) {
        p[base] = rng.uniform(0.6, 1.4);  // w component dominates: no sign flips
        p[base + t_len] = rng.uniform(-0.4, 0.4);
        p[base + 2L * t_len] = rng.uniform(-0.4, 0.4);
        p[base + 3L * t_len] = rng.uniform(-0.4, 0.4);
      } else {
        for (int c = 0; c < 3; ++c) p[base + static_cast<long>(c) * t_len] = rng.uniform(-1.0, 1.0);
      }
    }
  }
  return w;
}

struct TinyWorld {
  RetargetModel model;
};

Skeleton tiny_skeleton(int actuated_chain) {
  Skeleton sk;
  Joint root;
  root.name = "root";
  root.parent = -1;
  root.offset = {0.0, 0.0, 0.0};
  sk.joints.push_back(root);
  for (int i = 0; i < actuated_chain; ++i) {
    Joint j;
    j.name = "seg" + std::to_string(i);
    j.parent = static_cast<int>(sk.joints.size()) - 1;
    j.offset = {0.3, 0.7 - 0.2 * i, 0.1 * (i + 1)};
    sk.joints.push_back(j);
  }
  Joint tip;
  tip.name = "tip";
  tip.parent = static_cast<int>(sk.joints.size()) - 1;
  tip.offset = {0.2, 0.4, 0.0};
  tip.end_site = true;
  sk.joints.push_back(tip);
  sk.root_index = 0;
  return sk;
}

SkeletonConfig tiny_config(const Skeleton& sk, double height) {
  SkeletonConfig cfg;
  for (const Joint& j : sk.joints) {
    if (j.name == "root") {
      cfg.kinds[j.name] = JointKind::Fixed;
      cfg.parts[j.name] = 0;
    } else if (j.end_site) {
      cfg.kinds[j.name] = JointKind::EndEffector;
      cfg.parts[j.name] = 1;
    } else {
      cfg.kinds[j.name] = JointKind::Actuated;
      cfg.parts[j.name] = 1;
    }
  }
  cfg.end_effectors = {"tip", "tip", "tip"};
  cfg.height = height;
  return cfg;
}

/// Two tiny domains (J=3 and J=4 chains, P=2) with randomized stats: the
/// smallest model exercising every generator mechanism.
TinyWorld tiny_world(Rng& rng) {
  Skeleton sk_h = tiny_skeleton(1);
  Skeleton sk_r = tiny_skeleton(2);
  DomainSpec spec_h(sk_h, tiny_config(sk_h, 1.0));
  DomainSpec spec_r(sk_r, tiny_config(sk_r, 1.4));
  ModelConfig cfg;
  cfg.latent = 4;
  cfg.kernel = 3;
  cfg.disc_channels = 4;
  TinyWorld world{RetargetModel(std::move(spec_h), std::move(spec_r), cfg, rng)};
  for (Domain d : {Domain::Human, Domain::Robot}) {
    DomainStats st;
    const size_t rows = static_cast<size_t>(world.model.spec(d).feature_rows());
    for (size_t r = 0; r < rows; ++r) {
      st.mean.push_back(rng.uniform(-0.3, 0.3));
      st.stdev.push_back(rng.uniform(0.5, 1.5));
    }
    world.model.set_stats(d, st);
  }
  return world;
}

using Setup = std::function<void(Rng&, GradCheckResult*)>;

struct Check {
  std::string name;
  double tol;
  Setup setup;
};

int rint(Rng& rng, int lo, int hi) { return lo + rng.uniform_int(hi - lo + 1); }

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(unsigned long long seed, int draws,
                                                 std::ostream* log) {
  std::vector<Check> checks;
  auto add_check = [&checks](std::string name, double tol, Setup setup) {
    checks.push_back({std::move(name), tol, std::move(setup)});
  };

  // --- elementwise and reduction primitives ---
  add_check("add", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2), rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return add(l[0], l[1]); }),
                         leaves, kStep, r);
  });
  add_check("sub", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2), rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return sub(l[0], l[1]); }),
                         leaves, kStep, r);
  });
  add_check("mul", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2), rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return mul(l[0], l[1]); }),
                         leaves, kStep, r);
  });
  add_check("add_scalar", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    const double c = rng.uniform(-2, 2);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {m, n}, -1, 1),
                 [c](const std::vector<Tensor>& l) { return add_scalar(l[0], c); }),
        leaves, kStep, r);
  });
  add_check("mul_scalar", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    const double c = rng.uniform(-2, 2);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {m, n}, -1, 1),
                 [c](const std::vector<Tensor>& l) { return mul_scalar(l[0], c); }),
        leaves, kStep, r);
  });
  add_check("square", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return square(l[0]); }),
                         leaves, kStep, r);
  });
  add_check("tanh", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return tanh_op(l[0]); }),
                         leaves, kStep, r);
  });
  add_check("leaky_relu", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    const double slope = rng.uniform(0.05, 0.5);
    std::vector<Tensor> leaves{rand_tensor_nonzero(rng, {m, n}, 0.05)};
    check_gradients_once(
        weighted(rand_tensor(rng, {m, n}, -1, 1),
                 [slope](const std::vector<Tensor>& l) { return leaky_relu(l[0], slope); }),
        leaves, kStep, r);
  });
  add_check("sum", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once([](const std::vector<Tensor>& l) { return sum_all(l[0]); }, leaves,
                         kStep, r);
  });
  add_check("mean", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once([](const std::vector<Tensor>& l) { return mean_all(l[0]); }, leaves,
                         kStep, r);
  });

  // --- linear algebra / structure ---
  add_check("matmul", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 3), k = rint(rng, 1, 4), n = rint(rng, 1, 3);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, k}, -2, 2), rand_tensor(rng, {k, n}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m, n}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return matmul(l[0], l[1]); }),
                         leaves, kStep, r);
  });
  add_check("matmul_vec", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 3), k = rint(rng, 1, 4);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, k}, -2, 2), rand_tensor(rng, {k}, -2, 2)};
    check_gradients_once(weighted(rand_tensor(rng, {m}, -1, 1),
                                  [](const std::vector<Tensor>& l) { return matmul(l[0], l[1]); }),
                         leaves, kStep, r);
  });
  add_check("bias_add", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int c = rint(rng, 1, 4), t = rint(rng, 1, 5);
    std::vector<Tensor> leaves{rand_tensor(rng, {c, t}, -2, 2), rand_tensor(rng, {c}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {c, t}, -1, 1),
                 [](const std::vector<Tensor>& l) { return bias_add(l[0], l[1]); }),
        leaves, kStep, r);
  });
  add_check("conv1d", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int cin = rint(rng, 1, 3), cout = rint(rng, 1, 3);
    const int kk = 1 + 2 * rint(rng, 0, 2);  // 1, 3, 5
    Conv1dOptions opt;
    opt.stride = rint(rng, 1, 2);
    opt.pad = rng.uniform() < 0.5 ? 0 : (kk - 1) / 2;
    opt.mode = rng.uniform() < 0.5 ? PadMode::Reflect : PadMode::Zero;
    const int t = rint(rng, std::max(2, kk - 2 * opt.pad), 8);
    const int t_out = (t + 2 * opt.pad - kk) / opt.stride + 1;
    if (t_out < 1) return;  // skip infeasible geometry draw
    std::vector<Tensor> leaves{rand_tensor(rng, {cin, t}, -2, 2),
                               rand_tensor(rng, {cout, cin, kk}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {cout, t_out}, -1, 1),
                 [opt](const std::vector<Tensor>& l) { return conv1d(l[0], l[1], opt); }),
        leaves, kStep, r);
  });
  add_check("concat", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int axis = rng.uniform() < 0.5 ? 0 : 1;
    const int fixed = rint(rng, 1, 3);
    const int a = rint(rng, 1, 3), bsz = rint(rng, 1, 3);
    std::vector<int> sa = axis == 0 ? std::vector<int>{a, fixed} : std::vector<int>{fixed, a};
    std::vector<int> sb = axis == 0 ? std::vector<int>{bsz, fixed} : std::vector<int>{fixed, bsz};
    std::vector<int> so = axis == 0 ? std::vector<int>{a + bsz, fixed}
                                    : std::vector<int>{fixed, a + bsz};
    std::vector<Tensor> leaves{rand_tensor(rng, sa, -2, 2), rand_tensor(rng, sb, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, so, -1, 1),
                 [axis](const std::vector<Tensor>& l) { return concat({l[0], l[1]}, axis); }),
        leaves, kStep, r);
  });
  add_check("slice", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int rows = rint(rng, 2, 6), t = rint(rng, 1, 4);
    const int begin = rint(rng, 0, rows - 1), count = rint(rng, 1, rows - begin);
    std::vector<Tensor> leaves{rand_tensor(rng, {rows, t}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {count, t}, -1, 1),
                 [begin, count](const std::vector<Tensor>& l) {
                   return slice_rows(l[0], begin, count);
                 }),
        leaves, kStep, r);
  });
  add_check("reshape", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int m = rint(rng, 1, 4), n = rint(rng, 1, 4);
    std::vector<Tensor> leaves{rand_tensor(rng, {m, n}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {m * n}, -1, 1),
                 [m, n](const std::vector<Tensor>& l) { return reshape(l[0], {m * n}); }),
        leaves, kStep, r);
  });
  add_check("broadcast", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int n = rint(rng, 1, 3), m = rint(rng, 1, 4);
    std::vector<Tensor> leaves{rand_tensor(rng, {m}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {n, m}, -1, 1),
                 [n](const std::vector<Tensor>& l) { return broadcast_lead(l[0], n); }),
        leaves, kStep, r);
  });
  add_check("upsample1d", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int c = rint(rng, 1, 3), t = rint(rng, 2, 5), f = rint(rng, 2, 3);
    std::vector<Tensor> leaves{rand_tensor(rng, {c, t}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {c, t * f}, -1, 1),
                 [f](const std::vector<Tensor>& l) { return upsample1d(l[0], f); }),
        leaves, kStep, r);
  });
  add_check("normalize_l2", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int t = rint(rng, 1, 4);
    std::vector<RowSpan> spans{{0, 4}, {6, 4}};
    Tensor x({10, t});
    double* p = x.data();
    for (long i = 0; i < x.numel(); ++i) {
      const double mag = rng.uniform(0.3, 1.2);
      p[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    std::vector<Tensor> leaves{x};
    check_gradients_once(
        weighted(rand_tensor(rng, {10, t}, -1, 1),
                 [spans](const std::vector<Tensor>& l) {
                   return normalize_l2_spans(l[0], spans);
                 }),
        leaves, kStep, r);
  });
  add_check("channel_affine", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int c = rint(rng, 1, 4), t = rint(rng, 1, 4);
    std::vector<double> scale, shift;
    for (int i = 0; i < c; ++i) {
      scale.push_back(rng.uniform(0.5, 2.0));
      shift.push_back(rng.uniform(-1.0, 1.0));
    }
    std::vector<Tensor> leaves{rand_tensor(rng, {c, t}, -2, 2)};
    check_gradients_once(
        weighted(rand_tensor(rng, {c, t}, -1, 1),
                 [scale, shift](const std::vector<Tensor>& l) {
                   return channel_affine(l[0], scale, shift);
                 }),
        leaves, kStep, r);
  });
  add_check("sign_folded_sqdiff", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const int t = rint(rng, 1, 3);
    std::vector<RowSpan> spans{{0, 4}};
    // Keep per-column span dot products away from the fold boundary.
    Tensor a({7, t}), b({7, t});
    for (int col = 0; col < t; ++col) {
      double dot = 0.0;
      do {
        dot = 0.0;
        for (int row = 0; row < 7; ++row) {
          a.data()[static_cast<long>(row) * t + col] = rng.uniform(-1.5, 1.5);
          b.data()[static_cast<long>(row) * t + col] = rng.uniform(-1.5, 1.5);
        }
        for (int row = 0; row < 4; ++row)
          dot += a.data()[static_cast<long>(row) * t + col] *
                 b.data()[static_cast<long>(row) * t + col];
      } while (std::abs(dot) < 0.05);
    }
    std::vector<Tensor> leaves{a, b};
    check_gradients_once(
        [spans](const std::vector<Tensor>& l) { return sign_folded_sqdiff(l[0], l[1], spans); },
        leaves, kStep, r);
  });

  // --- forward kinematics ---
  add_check("fk_positions", kTolPrimitive, [](Rng& rng, GradCheckResult* r) {
    const bool root_local = rng.uniform() < 0.5;
    Skeleton sk = tiny_skeleton(rint(rng, 1, 2));
    SkeletonConfig cfg = tiny_config(sk, 1.0);
    DomainSpec spec(sk, cfg);
    const int t = rint(rng, 1, 3);
    Tensor rows({pose_row_count(spec.skeleton()), t});
    double* p = rows.data();
    const int tl = t;
    for (int j = 0; j < spec.skeleton().joint_count(); ++j)
      for (int col = 0; col < tl; ++col) {
        p[static_cast<long>(4 * j) * tl + col] = rng.uniform(0.6, 1.4);
        for (int c = 1; c < 4; ++c)
          p[static_cast<long>(4 * j + c) * tl + col] = rng.uniform(-0.5, 0.5);
      }
    for (int c = 0; c < 3; ++c)
      for (int col = 0; col < tl; ++col)
        p[static_cast<long>(4 * spec.skeleton().joint_count() + c) * tl + col] =
            rng.uniform(-1, 1);
    const Skeleton bound = spec.skeleton();
    std::vector<Tensor> leaves{rows};
    check_gradients_once(
        weighted(rand_tensor(rng, {3 * bound.joint_count(), t}, -1, 1),
                 [bound, root_local](const std::vector<Tensor>& l) {
                   return fk_positions(bound, l[0], root_local);
                 }),
        leaves, kStep, r);
  });

  // --- composite paths (tolerance 1e-3) ---
  add_check("generator_path", kTolComposite, [](Rng& rng, GradCheckResult* r) {
    TinyWorld world = tiny_world(rng);
    const RetargetModel& m = world.model;
    std::vector<Tensor> leaves = m.generator_params();
    leaves.push_back(rand_window(rng, m.spec(Domain::Human), 8));
    const DomainSpec& sr = m.spec(Domain::Robot);
    Tensor w = rand_tensor(rng, {3 * sr.skeleton().joint_count(), 8}, -1, 1);
    auto f = [&m, &sr, w](const std::vector<Tensor>& l) {
      Tensor out = m.retarget_window(Domain::Human, l.back());
      Tensor pos = fk_positions(sr.skeleton(), sr.pose_rows_from_features(out), true);
      return sum_all(mul(pos, w));
    };
    check_gradients_sampled(f, leaves, kStep, rng, 4, r);
  });
  add_check("generator_loss", kTolComposite, [](Rng& rng, GradCheckResult* r) {
    TinyWorld world = tiny_world(rng);
    const RetargetModel& m = world.model;
    std::vector<Tensor> bh{rand_window(rng, m.spec(Domain::Human), 8)};
    std::vector<Tensor> br{rand_window(rng, m.spec(Domain::Robot), 8)};
    std::vector<Tensor> leaves = m.generator_params();
    auto f = [&m, &bh, &br](const std::vector<Tensor>&) {
      return generator_loss(m, bh, br, 1.0, 10.0, 5.0, 1.0).total;
    };
    check_gradients_sampled(f, leaves, kStep, rng, 4, r);
  });
  add_check("discriminator_loss", kTolComposite, [](Rng& rng, GradCheckResult* r) {
    TinyWorld world = tiny_world(rng);
    const RetargetModel& m = world.model;
    const Domain d = rng.uniform() < 0.5 ? Domain::Human : Domain::Robot;
    std::vector<Tensor> real{rand_window(rng, m.spec(d), 8)};
    std::vector<Tensor> fake{rand_window(rng, m.spec(d), 8)};
    std::vector<Tensor> leaves = m.discriminator_params(d);
    auto f = [&m, d, &real, &fake](const std::vector<Tensor>&) {
      return discriminator_loss(m, d, real, fake);
    };
    check_gradients_sampled(f, leaves, kStep, rng, 4, r);
  });
  add_check("discriminator_input", kTolComposite, [](Rng& rng, GradCheckResult* r) {
    TinyWorld world = tiny_world(rng);
    const RetargetModel& m = world.model;
    const Domain d = rng.uniform() < 0.5 ? Domain::Human : Domain::Robot;
    std::vector<Tensor> leaves{rand_window(rng, m.spec(d), 8)};
    auto f = [&m, d](const std::vector<Tensor>& l) { return m.discriminate(d, l[0]); };
    check_gradients_sampled(f, leaves, kStep, rng, 8, r);
  });

  Rng rng(seed);
  std::vector<GradCheckResult> results;
  for (const Check& check : checks) {
    GradCheckResult r;
    r.name = check.name;
    r.tolerance = check.tol;
    Rng check_rng = rng.fork(results.size());
    while (r.draws < draws) check.setup(check_rng, &r);
    r.passed = r.max_rel_err < r.tolerance;
    if (log)
      *log << (r.passed ? "pass" : "FAIL") << "  " << r.name << "  draws " << r.draws
           << "  max rel err " << r.max_rel_err << " (tol " << r.tolerance << ")\n";
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace nmrt
