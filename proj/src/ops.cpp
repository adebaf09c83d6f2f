#include "nmrt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmrt/errors.hpp"

namespace nmrt {

namespace {

Tape* recording_tape(const std::vector<const Tensor*>& ins) {
  Tape* t = TapeScope::current();
  if (!t) return nullptr;
  return t->should_record(ins) ? t : nullptr;
}

std::vector<double> snap(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail(ErrKind::ShapeMismatch, std::string(op) + ": " + shape_name(a.shape()) + " vs " +
                                     shape_name(b.shape()));
}

/// Columns-and-rows view of a rank-1 or rank-2 tensor: [C] is one column.
void rows_cols(const char* op, const Tensor& t, long* rows, long* cols) {
  if (t.rank() == 1) {
    *rows = t.dim(0);
    *cols = 1;
  } else if (t.rank() == 2) {
    *rows = t.dim(0);
    *cols = t.dim(1);
  } else {
    fail(ErrKind::ShapeMismatch,
         std::string(op) + ": expected rank 1 or 2, got " + shape_name(t.shape()));
  }
}

void check_spans(const char* op, const std::vector<RowSpan>& spans, long rows) {
  for (const RowSpan& s : spans) {
    if (s.first < 0 || s.second <= 0 || s.first + s.second > rows)
      fail(ErrKind::ShapeMismatch, std::string(op) + ": span (" + std::to_string(s.first) + "," +
                                       std::to_string(s.second) + ") outside " +
                                       std::to_string(rows) + " rows");
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(out, {&a, &b},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   for (int s = 0; s < 2; ++s)
                     if (!gin[s].empty())
                       for (long i = 0; i < n; ++i) gin[s][i] += g[i];
                 });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(out, {&a, &b},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += g[i];
                   if (!gin[1].empty())
                     for (long i = 0; i < n; ++i) gin[1][i] -= g[i];
                 });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(out, {&a, &b},
                 [n, av = snap(a), bv = snap(b)](std::span<const double> g,
                                                 std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += g[i] * bv[static_cast<size_t>(i)];
                   if (!gin[1].empty())
                     for (long i = 0; i < n; ++i) gin[1][i] += g[i] * av[static_cast<size_t>(i)];
                 });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] + c;
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += g[i];
                 });
  }
  return out;
}

Tensor mul_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] * c;
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n, c](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += c * g[i];
                 });
  }
  return out;
}

Tensor square(const Tensor& a) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = pa[i] * pa[i];
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n, av = snap(a)](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i)
                       gin[0][i] += 2.0 * av[static_cast<size_t>(i)] * g[i];
                 });
  }
  return out;
}

Tensor tanh_op(const Tensor& a) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = std::tanh(pa[i]);
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n, yv = snap(out)](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) {
                       double y = yv[static_cast<size_t>(i)];
                       gin[0][i] += (1.0 - y * y) * g[i];
                     }
                 });
  }
  return out;
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const long n = out.numel();
  std::vector<double> factor(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    double f = pa[i] >= 0.0 ? 1.0 : slope;
    factor[static_cast<size_t>(i)] = f;
    po[i] = f * pa[i];
  }
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n, factor = std::move(factor)](std::span<const double> g,
                                                 std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += factor[static_cast<size_t>(i)] * g[i];
                 });
  }
  return out;
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  const double* pa = a.data();
  const long n = a.numel();
  for (long i = 0; i < n; ++i) s += pa[i];
  Tensor out = Tensor::scalar(s);
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += g[0];
                 });
  }
  return out;
}

Tensor mean_all(const Tensor& a) {
  const long n = a.numel();
  if (n == 0) fail(ErrKind::ShapeMismatch, "mean of an empty tensor");
  double s = 0.0;
  const double* pa = a.data();
  for (long i = 0; i < n; ++i) s += pa[i];
  Tensor out = Tensor::scalar(s / static_cast<double>(n));
  if (Tape* tape = recording_tape({&a})) {
    tape->record(out, {&a},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty()) {
                     double gi = g[0] / static_cast<double>(n);
                     for (long i = 0; i < n; ++i) gin[0][i] += gi;
                   }
                 });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2))
    fail(ErrKind::ShapeMismatch,
         "matmul: " + shape_name(a.shape()) + " x " + shape_name(b.shape()));
  const int m = a.dim(0);
  const int k = a.dim(1);
  if (b.dim(0) != k)
    fail(ErrKind::ShapeMismatch,
         "matmul: inner dims " + shape_name(a.shape()) + " x " + shape_name(b.shape()));
  const bool vec = b.rank() == 1;
  const int n = vec ? 1 : b.dim(1);
  Tensor out(vec ? std::vector<int>{m} : std::vector<int>{m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + static_cast<long>(l) * n;
      double* orow = po + static_cast<long>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(out, {&a, &b},
                 [m, k, n, av = snap(a), bv = snap(b)](std::span<const double> g,
                                                       std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (int i = 0; i < m; ++i)
                       for (int l = 0; l < k; ++l) {
                         double s = 0.0;
                         for (int j = 0; j < n; ++j)
                           s += g[static_cast<size_t>(i * n + j)] * bv[static_cast<size_t>(l * n + j)];
                         gin[0][static_cast<size_t>(i * k + l)] += s;
                       }
                   if (!gin[1].empty())
                     for (int i = 0; i < m; ++i)
                       for (int l = 0; l < k; ++l) {
                         double c = av[static_cast<size_t>(i * k + l)];
                         for (int j = 0; j < n; ++j)
                           gin[1][static_cast<size_t>(l * n + j)] += c * g[static_cast<size_t>(i * n + j)];
                       }
                 });
  }
  return out;
}

Tensor bias_add(const Tensor& x, const Tensor& b) {
  long rows = 0, cols = 0;
  rows_cols("bias_add", x, &rows, &cols);
  if (b.rank() != 1 || b.dim(0) != rows)
    fail(ErrKind::ShapeMismatch,
         "bias_add: " + shape_name(x.shape()) + " with bias " + shape_name(b.shape()));
  Tensor out(x.shape());
  const double* px = x.data();
  const double* pb = b.data();
  double* po = out.data();
  for (long c = 0; c < rows; ++c) {
    const double bv = pb[c];
    for (long t = 0; t < cols; ++t) po[c * cols + t] = px[c * cols + t] + bv;
  }
  if (Tape* tape = recording_tape({&x, &b})) {
    tape->record(out, {&x, &b},
                 [rows, cols](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < rows * cols; ++i) gin[0][i] += g[i];
                   if (!gin[1].empty())
                     for (long c = 0; c < rows; ++c) {
                       double s = 0.0;
                       for (long t = 0; t < cols; ++t) s += g[static_cast<size_t>(c * cols + t)];
                       gin[1][static_cast<size_t>(c)] += s;
                     }
                 });
  }
  return out;
}

namespace {

int reflect_index(int j, int t_len) {
  if (t_len == 1) return 0;
  while (j < 0 || j >= t_len) {
    if (j < 0)
      j = -j;
    else
      j = 2 * t_len - 2 - j;
  }
  return j;
}

/// Builds the padded row copy used by conv1d forward and backward.
std::vector<double> pad_rows(const double* px, int cin, int t_in, int pad, PadMode mode) {
  const int t_pad = t_in + 2 * pad;
  std::vector<double> xp(static_cast<size_t>(cin) * t_pad, 0.0);
  for (int c = 0; c < cin; ++c) {
    const double* row = px + static_cast<long>(c) * t_in;
    double* prow = xp.data() + static_cast<long>(c) * t_pad;
    for (int i = 0; i < t_pad; ++i) {
      int j = i - pad;
      if (j >= 0 && j < t_in)
        prow[i] = row[j];
      else if (mode == PadMode::Reflect)
        prow[i] = row[reflect_index(j, t_in)];
    }
  }
  return xp;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Conv1dOptions& opt) {
  if (x.rank() != 2 || w.rank() != 3)
    fail(ErrKind::ShapeMismatch,
         "conv1d: input " + shape_name(x.shape()) + ", weight " + shape_name(w.shape()));
  const int cin = x.dim(0);
  const int t_in = x.dim(1);
  const int cout = w.dim(0);
  const int k = w.dim(2);
  if (w.dim(1) != cin)
    fail(ErrKind::ShapeMismatch, "conv1d: weight wants " + std::to_string(w.dim(1)) +
                                     " input channels, input has " + std::to_string(cin));
  if (k <= 0) fail(ErrKind::ShapeMismatch, "conv1d: kernel size must be positive");
  if (opt.stride <= 0) fail(ErrKind::ShapeMismatch, "conv1d: stride must be positive");
  if (opt.pad < 0) fail(ErrKind::ShapeMismatch, "conv1d: padding must be non-negative");
  const int stride = opt.stride;
  const int pad = opt.pad;
  const int t_pad = t_in + 2 * pad;
  const int t_out = (t_pad - k) / stride + 1;
  if (t_pad < k || t_out <= 0)
    fail(ErrKind::ShapeMismatch, "conv1d: empty output for input length " + std::to_string(t_in) +
                                     ", kernel " + std::to_string(k));

  std::vector<double> xp = pad_rows(x.data(), cin, t_in, pad, opt.mode);
  Tensor out({cout, t_out});
  double* po = out.data();
  const double* pw = w.data();
  for (int o = 0; o < cout; ++o) {
    double* orow = po + static_cast<long>(o) * t_out;
    for (int c = 0; c < cin; ++c) {
      const double* xrow = xp.data() + static_cast<long>(c) * t_pad;
      const double* wrow = pw + (static_cast<long>(o) * cin + c) * k;
      for (int kk = 0; kk < k; ++kk) {
        const double coeff = wrow[kk];
        const double* xk = xrow + kk;
        for (int to = 0; to < t_out; ++to) orow[to] += coeff * xk[to * stride];
      }
    }
  }

  if (Tape* tape = recording_tape({&x, &w})) {
    PadMode mode = opt.mode;
    tape->record(
        out, {&x, &w},
        [cin, t_in, cout, k, stride, pad, t_pad, t_out, mode, xp = std::move(xp), wv = snap(w)](
            std::span<const double> g, std::span<std::span<double>> gin) {
          if (!gin[1].empty()) {
            for (int o = 0; o < cout; ++o) {
              const double* grow = g.data() + static_cast<long>(o) * t_out;
              for (int c = 0; c < cin; ++c) {
                const double* xrow = xp.data() + static_cast<long>(c) * t_pad;
                for (int kk = 0; kk < k; ++kk) {
                  const double* xk = xrow + kk;
                  double s = 0.0;
                  for (int to = 0; to < t_out; ++to) s += grow[to] * xk[to * stride];
                  gin[1][static_cast<size_t>((static_cast<long>(o) * cin + c) * k + kk)] += s;
                }
              }
            }
          }
          if (!gin[0].empty()) {
            std::vector<double> gxp(static_cast<size_t>(cin) * t_pad, 0.0);
            for (int o = 0; o < cout; ++o) {
              const double* grow = g.data() + static_cast<long>(o) * t_out;
              for (int c = 0; c < cin; ++c) {
                double* gxrow = gxp.data() + static_cast<long>(c) * t_pad;
                const double* wrow = wv.data() + (static_cast<long>(o) * cin + c) * k;
                for (int kk = 0; kk < k; ++kk) {
                  const double coeff = wrow[kk];
                  double* gxk = gxrow + kk;
                  for (int to = 0; to < t_out; ++to) gxk[to * stride] += coeff * grow[to];
                }
              }
            }
            for (int c = 0; c < cin; ++c) {
              const double* gxrow = gxp.data() + static_cast<long>(c) * t_pad;
              for (int i = 0; i < t_pad; ++i) {
                int j = i - pad;
                if (j >= 0 && j < t_in)
                  gin[0][static_cast<size_t>(static_cast<long>(c) * t_in + j)] += gxrow[i];
                else if (mode == PadMode::Reflect)
                  gin[0][static_cast<size_t>(static_cast<long>(c) * t_in +
                                             reflect_index(j, t_in))] += gxrow[i];
              }
            }
          }
        });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) fail(ErrKind::ShapeMismatch, "concat of zero tensors");
  const int rank = parts[0].rank();
  if (rank != 1 && rank != 2)
    fail(ErrKind::ShapeMismatch, "concat: expected rank 1 or 2, got " + shape_name(parts[0].shape()));
  if (axis != 0 && axis != 1) fail(ErrKind::ShapeMismatch, "concat: axis must be 0 or 1");
  if (axis == 1 && rank != 2)
    fail(ErrKind::ShapeMismatch, "concat: axis 1 needs rank 2, got " + shape_name(parts[0].shape()));

  const int fixed_axis = 1 - axis;  // the dimension that must agree
  long fixed = rank == 2 ? parts[0].dim(fixed_axis) : 1;
  long grown = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != rank || (rank == 2 && p.dim(fixed_axis) != fixed))
      fail(ErrKind::ShapeMismatch,
           "concat: " + shape_name(parts[0].shape()) + " vs " + shape_name(p.shape()));
    grown += rank == 2 ? p.dim(axis) : p.dim(0);
  }
  std::vector<int> out_shape;
  if (rank == 1)
    out_shape = {static_cast<int>(grown)};
  else if (axis == 0)
    out_shape = {static_cast<int>(grown), static_cast<int>(fixed)};
  else
    out_shape = {static_cast<int>(fixed), static_cast<int>(grown)};
  Tensor out(out_shape);
  double* po = out.data();

  std::vector<long> offsets;  // start of each part along `axis`
  long at = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(at);
    if (axis == 0 || rank == 1) {
      std::copy(p.data(), p.data() + p.numel(), po + at * fixed);
      at += p.dim(0);
    } else {
      const long w = p.dim(1);
      for (long r = 0; r < fixed; ++r)
        std::copy(p.data() + r * w, p.data() + (r + 1) * w, po + r * grown + at);
      at += w;
    }
  }

  std::vector<const Tensor*> ins;
  for (const Tensor& p : parts) ins.push_back(&p);
  if (Tape* tape = recording_tape(ins)) {
    std::vector<long> widths;
    for (const Tensor& p : parts) widths.push_back(rank == 2 ? p.dim(axis) : p.dim(0));
    const bool along_rows = axis == 0 || rank == 1;
    tape->record(out, ins,
                 [offsets = std::move(offsets), widths = std::move(widths), fixed, grown,
                  along_rows](std::span<const double> g, std::span<std::span<double>> gin) {
                   for (size_t p = 0; p < widths.size(); ++p) {
                     if (gin[p].empty()) continue;
                     if (along_rows) {
                       const long off = offsets[p] * fixed;
                       const long n = widths[p] * fixed;
                       for (long i = 0; i < n; ++i)
                         gin[p][static_cast<size_t>(i)] += g[static_cast<size_t>(off + i)];
                     } else {
                       for (long r = 0; r < fixed; ++r)
                         for (long c = 0; c < widths[p]; ++c)
                           gin[p][static_cast<size_t>(r * widths[p] + c)] +=
                               g[static_cast<size_t>(r * grown + offsets[p] + c)];
                     }
                   }
                 });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int begin, int count) {
  long rows = 0, cols = 0;
  rows_cols("slice_rows", x, &rows, &cols);
  if (begin < 0 || count < 0 || begin + count > rows)
    fail(ErrKind::ShapeMismatch, "slice_rows: [" + std::to_string(begin) + "," +
                                     std::to_string(begin + count) + ") outside " +
                                     std::to_string(rows) + " rows");
  Tensor out(x.rank() == 2 ? std::vector<int>{count, static_cast<int>(cols)}
                           : std::vector<int>{count});
  const long off = static_cast<long>(begin) * cols;
  const long n = static_cast<long>(count) * cols;
  std::copy(x.data() + off, x.data() + off + n, out.data());
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [off, n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][static_cast<size_t>(off + i)] += g[static_cast<size_t>(i)];
                 });
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  Tensor out(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  if (out.numel() != x.numel())
    fail(ErrKind::ShapeMismatch,
         "reshape: " + shape_name(x.shape()) + " to " + shape_name(out.shape()));
  const long n = x.numel();
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [n](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (!gin[0].empty())
                     for (long i = 0; i < n; ++i) gin[0][i] += g[i];
                 });
  }
  return out;
}

Tensor broadcast_lead(const Tensor& x, int n) {
  if (n < 0) fail(ErrKind::ShapeMismatch, "broadcast_lead: negative repeat count");
  std::vector<int> out_shape{n};
  for (int d : x.shape()) out_shape.push_back(d);
  Tensor out(std::move(out_shape));
  const long m = x.numel();
  double* po = out.data();
  for (int i = 0; i < n; ++i) std::copy(x.data(), x.data() + m, po + static_cast<long>(i) * m);
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [n, m](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (gin[0].empty()) return;
                   for (int i = 0; i < n; ++i)
                     for (long j = 0; j < m; ++j)
                       gin[0][static_cast<size_t>(j)] += g[static_cast<size_t>(static_cast<long>(i) * m + j)];
                 });
  }
  return out;
}

Tensor upsample1d(const Tensor& x, int factor) {
  if (x.rank() != 2)
    fail(ErrKind::ShapeMismatch, "upsample1d: expected rank 2, got " + shape_name(x.shape()));
  if (factor < 1) fail(ErrKind::ShapeMismatch, "upsample1d: factor must be >= 1");
  const int c_dim = x.dim(0);
  const int t_in = x.dim(1);
  const int t_out = t_in * factor;
  Tensor out({c_dim, t_out});
  const double* px = x.data();
  double* po = out.data();
  for (int c = 0; c < c_dim; ++c) {
    const double* row = px + static_cast<long>(c) * t_in;
    double* orow = po + static_cast<long>(c) * t_out;
    for (int io = 0; io < t_out; ++io) {
      const int i = io / factor;
      const int r = io % factor;
      const int i1 = std::min(i + 1, t_in - 1);
      const double w1 = static_cast<double>(r) / factor;
      orow[io] = (1.0 - w1) * row[i] + w1 * row[i1];
    }
  }
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [c_dim, t_in, t_out, factor](std::span<const double> g,
                                              std::span<std::span<double>> gin) {
                   if (gin[0].empty()) return;
                   for (int c = 0; c < c_dim; ++c) {
                     const long gb = static_cast<long>(c) * t_out;
                     const long xb = static_cast<long>(c) * t_in;
                     for (int io = 0; io < t_out; ++io) {
                       const int i = io / factor;
                       const int r = io % factor;
                       const int i1 = std::min(i + 1, t_in - 1);
                       const double w1 = static_cast<double>(r) / factor;
                       gin[0][static_cast<size_t>(xb + i)] += (1.0 - w1) * g[static_cast<size_t>(gb + io)];
                       gin[0][static_cast<size_t>(xb + i1)] += w1 * g[static_cast<size_t>(gb + io)];
                     }
                   }
                 });
  }
  return out;
}

Tensor normalize_l2_spans(const Tensor& x, const std::vector<RowSpan>& spans) {
  long rows = 0, cols = 0;
  rows_cols("normalize_l2_spans", x, &rows, &cols);
  check_spans("normalize_l2_spans", spans, rows);
  constexpr double kEps = 1e-30;
  Tensor out(x.shape());
  std::copy(x.data(), x.data() + x.numel(), out.data());
  double* po = out.data();
  // Norm per (span, column), snapshotted for backward.
  std::vector<double> norms(spans.size() * static_cast<size_t>(cols));
  for (size_t s = 0; s < spans.size(); ++s) {
    const long b = spans[s].first;
    const long len = spans[s].second;
    for (long t = 0; t < cols; ++t) {
      double sq = 0.0;
      for (long r = 0; r < len; ++r) {
        double v = po[(b + r) * cols + t];
        sq += v * v;
      }
      double nrm = std::max(std::sqrt(sq), kEps);
      norms[s * static_cast<size_t>(cols) + static_cast<size_t>(t)] = nrm;
      for (long r = 0; r < len; ++r) po[(b + r) * cols + t] /= nrm;
    }
  }
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [rows, cols, spans, norms = std::move(norms), yv = snap(out)](
                     std::span<const double> g, std::span<std::span<double>> gin) {
                   if (gin[0].empty()) return;
                   std::vector<char> covered(static_cast<size_t>(rows), 0);
                   for (const RowSpan& s : spans)
                     for (int r = 0; r < s.second; ++r) covered[static_cast<size_t>(s.first + r)] = 1;
                   for (long r = 0; r < rows; ++r) {
                     if (covered[static_cast<size_t>(r)]) continue;
                     for (long t = 0; t < cols; ++t)
                       gin[0][static_cast<size_t>(r * cols + t)] += g[static_cast<size_t>(r * cols + t)];
                   }
                   for (size_t s = 0; s < spans.size(); ++s) {
                     const long b = spans[s].first;
                     const long len = spans[s].second;
                     for (long t = 0; t < cols; ++t) {
                       const double nrm = norms[s * static_cast<size_t>(cols) + static_cast<size_t>(t)];
                       double dot = 0.0;
                       for (long r = 0; r < len; ++r)
                         dot += g[static_cast<size_t>((b + r) * cols + t)] * yv[static_cast<size_t>((b + r) * cols + t)];
                       for (long r = 0; r < len; ++r) {
                         const size_t i = static_cast<size_t>((b + r) * cols + t);
                         gin[0][i] += (g[i] - yv[i] * dot) / nrm;
                       }
                     }
                   }
                 });
  }
  return out;
}

Tensor channel_affine(const Tensor& x, const std::vector<double>& scale,
                      const std::vector<double>& shift) {
  long rows = 0, cols = 0;
  rows_cols("channel_affine", x, &rows, &cols);
  if (static_cast<long>(scale.size()) != rows || static_cast<long>(shift.size()) != rows)
    fail(ErrKind::ShapeMismatch, "channel_affine: " + std::to_string(scale.size()) + "/" +
                                     std::to_string(shift.size()) + " coefficients for " +
                                     std::to_string(rows) + " rows");
  Tensor out(x.shape());
  const double* px = x.data();
  double* po = out.data();
  for (long c = 0; c < rows; ++c) {
    const double sc = scale[static_cast<size_t>(c)];
    const double sh = shift[static_cast<size_t>(c)];
    for (long t = 0; t < cols; ++t) po[c * cols + t] = px[c * cols + t] * sc + sh;
  }
  if (Tape* tape = recording_tape({&x})) {
    tape->record(out, {&x},
                 [rows, cols, scale](std::span<const double> g, std::span<std::span<double>> gin) {
                   if (gin[0].empty()) return;
                   for (long c = 0; c < rows; ++c) {
                     const double sc = scale[static_cast<size_t>(c)];
                     for (long t = 0; t < cols; ++t)
                       gin[0][static_cast<size_t>(c * cols + t)] += sc * g[static_cast<size_t>(c * cols + t)];
                   }
                 });
  }
  return out;
}

Tensor sign_folded_sqdiff(const Tensor& a, const Tensor& b, const std::vector<RowSpan>& spans) {
  check_same_shape("sign_folded_sqdiff", a, b);
  long rows = 0, cols = 0;
  rows_cols("sign_folded_sqdiff", a, &rows, &cols);
  check_spans("sign_folded_sqdiff", spans, rows);
  std::vector<char> covered(static_cast<size_t>(rows), 0);
  for (const RowSpan& s : spans)
    for (int r = 0; r < s.second; ++r) covered[static_cast<size_t>(s.first + r)] = 1;

  const double* pa = a.data();
  const double* pb = b.data();
  double total = 0.0;
  std::vector<double> signs(spans.size() * static_cast<size_t>(cols), 1.0);
  for (long r = 0; r < rows; ++r) {
    if (covered[static_cast<size_t>(r)]) continue;
    for (long t = 0; t < cols; ++t) {
      double d = pa[r * cols + t] - pb[r * cols + t];
      total += d * d;
    }
  }
  for (size_t s = 0; s < spans.size(); ++s) {
    const long fb = spans[s].first;
    const long len = spans[s].second;
    for (long t = 0; t < cols; ++t) {
      double plus = 0.0, minus = 0.0;
      for (long r = 0; r < len; ++r) {
        const double av = pa[(fb + r) * cols + t];
        const double bv = pb[(fb + r) * cols + t];
        plus += (av - bv) * (av - bv);
        minus += (av + bv) * (av + bv);
      }
      if (minus < plus) {
        signs[s * static_cast<size_t>(cols) + static_cast<size_t>(t)] = -1.0;
        total += minus;
      } else {
        total += plus;
      }
    }
  }
  Tensor out = Tensor::scalar(total);
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(out, {&a, &b},
                 [rows, cols, spans, covered = std::move(covered), signs = std::move(signs),
                  av = snap(a), bv = snap(b)](std::span<const double> g,
                                              std::span<std::span<double>> gin) {
                   const double g0 = g[0];
                   for (long r = 0; r < rows; ++r) {
                     if (covered[static_cast<size_t>(r)]) continue;
                     for (long t = 0; t < cols; ++t) {
                       const size_t i = static_cast<size_t>(r * cols + t);
                       const double d = 2.0 * (av[i] - bv[i]) * g0;
                       if (!gin[0].empty()) gin[0][i] += d;
                       if (!gin[1].empty()) gin[1][i] -= d;
                     }
                   }
                   for (size_t s = 0; s < spans.size(); ++s) {
                     const long fb = spans[s].first;
                     const long len = spans[s].second;
                     for (long t = 0; t < cols; ++t) {
                       const double sg = signs[s * static_cast<size_t>(cols) + static_cast<size_t>(t)];
                       for (long r = 0; r < len; ++r) {
                         const size_t i = static_cast<size_t>((fb + r) * cols + t);
                         const double d = 2.0 * (av[i] - sg * bv[i]) * g0;
                         if (!gin[0].empty()) gin[0][i] += d;
                         if (!gin[1].empty()) gin[1][i] -= sg * d;
                       }
                     }
                   }
                 });
  }
  return out;
}

}  // namespace nmrt
