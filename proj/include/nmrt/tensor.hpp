#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace nmrt {

class Tape;

std::string shape_name(const std::vector<int>& shape);

/// Dense row-major 64-bit tensor. A Tensor is a cheap handle to a shared
/// buffer; ops never mutate their inputs and snapshot whatever their backward
/// pass needs, so mutating a buffer after recording (e.g. an optimizer update)
/// cannot corrupt an existing tape. Rank-0 tensors (shape {}) are scalars.
class Tensor {
 public:
  Tensor() : Tensor(std::vector<int>{}) {}
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  long numel() const { return numel_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }
  std::span<const double> values() const { return {data_->data(), data_->size()}; }

  /// Scalar value; throws NotScalar for anything but a 1-element tensor.
  double value() const;
  double at(int i) const { return (*data_)[static_cast<size_t>(i)]; }
  double at(int i, int j) const {
    return (*data_)[static_cast<size_t>(i) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(j)];
  }

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    return *this;
  }

  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  /// Same buffer, no tape binding.
  Tensor detached() const;
  /// Deep copy, no tape binding.
  Tensor clone() const;

  const void* buffer_id() const { return data_.get(); }

 private:
  std::vector<int> shape_;
  long numel_ = 0;
  std::shared_ptr<std::vector<double>> data_;
  bool requires_grad_ = false;
  Tape* tape_ = nullptr;
  int node_ = -1;

  friend class Tape;
};

/// Reverse-mode gradient tape. Nodes are appended in execution order and the
/// backward pass visits them in strict reverse order, which makes gradient
/// accumulation deterministic. Single-owner: a tape must never be shared
/// across threads.
class Tape {
 public:
  using VjpFn =
      std::function<void(std::span<const double> grad_out, std::span<std::span<double>> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf. Memoized per buffer, so repeated use of one parameter
  /// accumulates into a single gradient slot.
  int watch(const Tensor& t);

  /// Records `out` as a new node computed from `inputs`. Inputs that are
  /// neither on the tape nor requiring gradients get slot -1 and receive an
  /// empty span in the vjp. Called by ops after computing forward values.
  void record(Tensor& out, const std::vector<const Tensor*>& inputs, VjpFn vjp);

  /// True if any input is already on this tape or requires gradients;
  /// ops skip recording otherwise.
  bool should_record(const std::vector<const Tensor*>& inputs) const;

  int node_of(const Tensor& t) const;

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape once. loss must be a
  /// scalar on this tape; a second call without reset() throws AlreadyConsumed.
  void backward(const Tensor& loss);

  /// Gradient of the loss w.r.t. `t` (leaf or intermediate), shaped like `t`.
  /// Zero tensor when the node was never reached.
  Tensor grad(const Tensor& t) const;

  bool consumed() const { return consumed_; }
  size_t node_count() const { return nodes_.size(); }
  void reset();

 private:
  struct Node {
    std::vector<int> inputs;
    long numel = 0;
    VjpFn vjp;  // empty for leaves
  };

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<const void*, int> watched_;
  bool consumed_ = false;
};

/// RAII scope that makes a tape current for the calling thread. Ops record
/// onto the innermost active scope; with no scope they run forward-only.
class TapeScope {
 public:
  explicit TapeScope(Tape* tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  static Tape* current();

 private:
  Tape* prev_;
};

}  // namespace nmrt
