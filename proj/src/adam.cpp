#include "nmrt/adam.hpp"

#include <cmath>

#include "nmrt/errors.hpp"

namespace nmrt {

void Adam::step(std::vector<Tensor>& params, const Tape& tape) {
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(tape.grad(p));
  step_grads(params, grads);
}

void Adam::step_grads(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    fail(ErrKind::ShapeMismatch, "adam: " + std::to_string(grads.size()) + " gradients for " +
                                     std::to_string(params.size()) + " parameters");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(static_cast<size_t>(params[i].numel()), 0.0);
      v_[i].assign(static_cast<size_t>(params[i].numel()), 0.0);
    }
  }
  if (m_.size() != params.size())
    fail(ErrKind::ShapeMismatch, "adam: parameter list size changed between steps");

  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    if (g.shape() != p.shape())
      fail(ErrKind::ShapeMismatch, "adam: gradient " + shape_name(g.shape()) +
                                       " for parameter " + shape_name(p.shape()));
    if (m_[i].size() != static_cast<size_t>(p.numel()))
      fail(ErrKind::ShapeMismatch, "adam: parameter size changed between steps");
    double* pp = p.data();
    const double* pg = g.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const long n = p.numel();
    for (long j = 0; j < n; ++j) {
      m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * pg[j];
      v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * pg[j] * pg[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      pp[j] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
    }
  }
}

}  // namespace nmrt
