#include "nmrt/tensor.hpp"

#include <numeric>

#include "nmrt/errors.hpp"

namespace nmrt {

std::string shape_name(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

static long checked_numel(const std::vector<int>& shape) {
  long n = 1;
  for (int d : shape) {
    if (d < 0) fail(ErrKind::ShapeMismatch, "negative dimension in " + shape_name(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      numel_(checked_numel(shape_)),
      data_(std::make_shared<std::vector<double>>(static_cast<size_t>(numel_), 0.0)) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), numel_(checked_numel(shape_)) {
  if (static_cast<long>(values.size()) != numel_)
    fail(ErrKind::ShapeMismatch, "value count " + std::to_string(values.size()) +
                                     " does not fill shape " + shape_name(shape_));
  data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_->begin(), t.data_->end(), v);
  return t;
}

double Tensor::value() const {
  if (numel_ != 1)
    fail(ErrKind::NotScalar, "expected a scalar, got shape " + shape_name(shape_));
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  t.requires_grad_ = false;
  return t;
}

Tensor Tensor::clone() const {
  Tensor t(shape_, std::vector<double>(*data_));
  return t;
}

int Tape::watch(const Tensor& t) {
  auto it = watched_.find(t.buffer_id());
  if (it != watched_.end()) return it->second;
  Node leaf;
  leaf.numel = t.numel();
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(leaf));
  watched_.emplace(t.buffer_id(), id);
  return id;
}

int Tape::node_of(const Tensor& t) const {
  if (t.tape() == this && t.node() >= 0) return t.node();
  auto it = watched_.find(t.buffer_id());
  if (it != watched_.end()) return it->second;
  return -1;
}

bool Tape::should_record(const std::vector<const Tensor*>& inputs) const {
  for (const Tensor* t : inputs)
    if (t->requires_grad() || node_of(*t) >= 0) return true;
  return false;
}

void Tape::record(Tensor& out, const std::vector<const Tensor*>& inputs, VjpFn vjp) {
  Node node;
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    int id = node_of(*t);
    if (id < 0 && t->requires_grad()) id = watch(*t);
    node.inputs.push_back(id);
  }
  node.numel = out.numel();
  node.vjp = std::move(vjp);
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_)
    fail(ErrKind::AlreadyConsumed, "backward was already run on this tape; reset() first");
  if (loss.numel() != 1)
    fail(ErrKind::NotScalar,
         "backward needs a scalar loss, got shape " + shape_name(loss.shape()));
  int seed = node_of(loss);
  if (seed < 0) fail(ErrKind::NotScalar, "loss tensor is not on this tape");

  grads_.assign(nodes_.size(), {});
  grads_[static_cast<size_t>(seed)] = {1.0};

  std::vector<std::span<double>> gin;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& node = nodes_[static_cast<size_t>(i)];
    std::vector<double>& gout = grads_[static_cast<size_t>(i)];
    if (gout.empty() || !node.vjp) continue;
    gin.clear();
    for (int in : node.inputs) {
      if (in < 0) {
        gin.push_back({});
        continue;
      }
      std::vector<double>& slot = grads_[static_cast<size_t>(in)];
      if (slot.empty()) slot.assign(static_cast<size_t>(nodes_[static_cast<size_t>(in)].numel), 0.0);
      gin.push_back(slot);
    }
    node.vjp(std::span<const double>(gout), std::span<std::span<double>>(gin));
  }
  consumed_ = true;
}

Tensor Tape::grad(const Tensor& t) const {
  Tensor g(t.shape());
  int id = node_of(t);
  if (id < 0) return g;
  const std::vector<double>& slot = grads_[static_cast<size_t>(id)];
  if (slot.empty()) return g;
  if (static_cast<long>(slot.size()) != t.numel())
    fail(ErrKind::ShapeMismatch, "gradient size " + std::to_string(slot.size()) +
                                     " does not match tensor shape " + shape_name(t.shape()));
  std::copy(slot.begin(), slot.end(), g.data());
  return g;
}

void Tape::reset() {
  nodes_.clear();
  grads_.clear();
  watched_.clear();
  consumed_ = false;
}

namespace {
thread_local Tape* g_current_tape = nullptr;
}

TapeScope::TapeScope(Tape* tape) : prev_(g_current_tape) { g_current_tape = tape; }
TapeScope::~TapeScope() { g_current_tape = prev_; }
Tape* TapeScope::current() { return g_current_tape; }

}  // namespace nmrt
