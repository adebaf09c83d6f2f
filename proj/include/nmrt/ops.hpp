#pragma once

#include <utility>
#include <vector>

#include "nmrt/tensor.hpp"

namespace nmrt {

/// Primitive differentiable ops. Every op computes its forward value eagerly;
/// if a TapeScope is active and any input participates in the graph, the op
/// records a node whose vjp closure owns snapshots of everything backward
/// needs. With no active scope the ops are plain numeric kernels.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

/// [m,k]x[k,n] -> [m,n], or [m,k]x[k] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x [C,T] + b [C] broadcast along T; also plain [C] + [C].
Tensor bias_add(const Tensor& x, const Tensor& b);

enum class PadMode { Reflect, Zero };

struct Conv1dOptions {
  int stride = 1;
  int pad = 0;  // samples added on each end
  PadMode mode = PadMode::Reflect;
};

/// x [Cin,T], w [Cout,Cin,K]; output length (T + 2*pad - K)/stride + 1.
/// Reflect padding mirrors without repeating the edge sample.
Tensor conv1d(const Tensor& x, const Tensor& w, const Conv1dOptions& opt);

/// Concatenate rank-1 or rank-2 tensors along axis 0 or (rank 2 only) 1.
Tensor concat(const std::vector<Tensor>& parts, int axis);
inline Tensor concat_rows(const std::vector<Tensor>& parts) { return concat(parts, 0); }
Tensor slice_rows(const Tensor& x, int begin, int count);
Tensor reshape(const Tensor& x, std::vector<int> shape);

/// Repeats x n times along a new leading dimension: [d...] -> [n, d...].
Tensor broadcast_lead(const Tensor& x, int n);

/// Linear upsample along the last axis of x [C,T] by an integer factor:
/// y[c, f*i+r] interpolates x[c,i] and x[c,i+1] (edge-clamped) at r/f.
Tensor upsample1d(const Tensor& x, int factor);

/// Row span (begin, length) inside a feature column.
using RowSpan = std::pair<int, int>;

/// L2-normalizes each span of rows per column of x [C,T] (or [C] as one
/// column); rows outside every span pass through unchanged.
Tensor normalize_l2_spans(const Tensor& x, const std::vector<RowSpan>& spans);

/// y[c,t] = x[c,t] * scale[c] + shift[c]; scale/shift are constants.
Tensor channel_affine(const Tensor& x, const std::vector<double>& scale,
                      const std::vector<double>& shift);

/// Sum of squared differences where each listed span is compared up to sign:
/// per column, a span contributes min(|a-b|^2, |a+b|^2) over the span block.
/// Rows outside every span contribute plain (a-b)^2. Returns a 0-d sum.
Tensor sign_folded_sqdiff(const Tensor& a, const Tensor& b, const std::vector<RowSpan>& spans);

}  // namespace nmrt
