#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ladder/error.hpp"
#include "ladder/graph.hpp"
#include "ladder/rng.hpp"

namespace ladder {
namespace {

using Inputs = Graph::Inputs;
using Grads = std::vector<Tensor*>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMatrix> mat(double* p, std::size_t rows, std::size_t cols) {
  return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
Eigen::Map<const RowMatrix> cmat(const double* p, std::size_t rows, std::size_t cols) {
  return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

void check_broadcast(std::string_view op, const Shape& a, const Shape& b) {
  if (!is_suffix(b, a)) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(b) + " onto " + to_string(a));
  }
}

// Applies out[o*inner + i] = f(a[o*inner + i], b[i]).
template <class F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  const std::size_t inner = b.size();
  const std::size_t outer = inner ? a.size() / inner : 0;
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * inner;
    for (std::size_t i = 0; i < inner; ++i) ov[base + i] = f(av[base + i], bv[i]);
  }
  return out;
}

// Accumulates ga += da(a, b, g) elementwise and gb += sum over leading axes of db(a, b, g).
template <class DA, class DB>
void broadcast_backward(const Tensor& a, const Tensor& b, const Tensor& g, Tensor* ga, Tensor* gb, DA da, DB db) {
  const std::size_t inner = b.size();
  const std::size_t outer = inner ? a.size() / inner : 0;
  auto av = a.data();
  auto bv = b.data();
  auto gv = g.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * inner;
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t k = base + i;
      if (ga) (*ga)[k] += da(av[k], bv[i], gv[k]);
      if (gb) (*gb)[i] += db(av[k], bv[i], gv[k]);
    }
  }
}

template <class F, class DF>
Var unary(std::string_view name, Var a, F f, DF df) {
  return a.graph().record(
      name, {a},
      [f](const Inputs& in) {
        Tensor out(in[0]->shape());
        auto x = in[0]->data();
        auto y = out.data();
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
        return out;
      },
      [df](const Inputs& in, const Tensor& out, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        auto x = in[0]->data();
        auto y = out.data();
        auto gv = g.data();
        auto gx = gin[0]->data();
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gv[i] * df(x[i], y[i]);
      });
}

std::size_t feature_count(std::string_view op, const Shape& s) {
  if (s.empty() || s.back() == 0) throw DimensionError(std::string(op) + ": needs a trailing feature axis, got " + to_string(s));
  return s.back();
}

void check_rank(std::string_view op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + to_string(s));
  }
}

}  // namespace

Var add(Var a, Var b) {
  check_broadcast("add", a.shape(), b.shape());
  return a.graph().record(
      "add", {a, b}, [](const Inputs& in) { return broadcast_apply(*in[0], *in[1], [](double x, double y) { return x + y; }); },
      [](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        broadcast_backward(*in[0], *in[1], g, gin[0], gin[1], [](double, double, double gg) { return gg; },
                           [](double, double, double gg) { return gg; });
      });
}

Var sub(Var a, Var b) {
  check_broadcast("sub", a.shape(), b.shape());
  return a.graph().record(
      "sub", {a, b}, [](const Inputs& in) { return broadcast_apply(*in[0], *in[1], [](double x, double y) { return x - y; }); },
      [](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        broadcast_backward(*in[0], *in[1], g, gin[0], gin[1], [](double, double, double gg) { return gg; },
                           [](double, double, double gg) { return -gg; });
      });
}

Var mul(Var a, Var b) {
  check_broadcast("mul", a.shape(), b.shape());
  return a.graph().record(
      "mul", {a, b}, [](const Inputs& in) { return broadcast_apply(*in[0], *in[1], [](double x, double y) { return x * y; }); },
      [](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        broadcast_backward(*in[0], *in[1], g, gin[0], gin[1], [](double, double y, double gg) { return gg * y; },
                           [](double x, double, double gg) { return gg * x; });
      });
}

Var div(Var a, Var b) {
  check_broadcast("div", a.shape(), b.shape());
  return a.graph().record(
      "div", {a, b}, [](const Inputs& in) { return broadcast_apply(*in[0], *in[1], [](double x, double y) { return x / y; }); },
      [](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        broadcast_backward(*in[0], *in[1], g, gin[0], gin[1], [](double, double y, double gg) { return gg / y; },
                           [](double x, double y, double gg) { return -gg * x / (y * y); });
      });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sum(Var a) {
  return a.graph().record(
      "sum", {a},
      [](const Inputs& in) {
        double s = 0.0;
        for (double v : in[0]->data()) s += v;
        return Tensor::scalar(s);
      },
      [](const Inputs&, const Tensor&, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        const double gv = g[0];
        for (auto& v : gin[0]->data()) v += gv;
      });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.value().size()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  return a.graph().record(
      "reshape", {a}, [shape](const Inputs& in) { return in[0]->reshaped(shape); },
      [](const Inputs&, const Tensor&, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        auto d = gin[0]->data();
        auto s = g.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  if (a.shape().empty() || begin > end || end > a.shape()[0]) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + to_string(a.shape()));
  }
  return a.graph().record(
      "slice_rows", {a}, [begin, end](const Inputs& in) { return in[0]->slice_rows(begin, end); },
      [begin](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        const std::size_t row = in[0]->size() / in[0]->dim(0);
        auto d = gin[0]->data();
        auto s = g.data();
        for (std::size_t i = 0; i < s.size(); ++i) d[begin * row + i] += s[i];
      });
}

Var matmul(Var a, Var b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  return a.graph().record(
      "matmul", {a, b},
      [m, k, n](const Inputs& in) {
        Tensor out(Shape{m, n});
        mat(out.data().data(), m, n).noalias() = cmat(in[0]->data().data(), m, k) * cmat(in[1]->data().data(), k, n);
        return out;
      },
      [m, k, n](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        const auto G = cmat(g.data().data(), m, n);
        if (gin[0]) mat(gin[0]->data().data(), m, k).noalias() += G * cmat(in[1]->data().data(), k, n).transpose();
        if (gin[1]) mat(gin[1]->data().data(), k, n).noalias() += cmat(in[0]->data().data(), m, k).transpose() * G;
      });
}

namespace {

struct ConvDims {
  std::size_t batch, h, w, cin, kh, kw, cout, oh, ow;
};

// Rows are output positions (b, y, x); columns are (dy, dx, c), matching the
// row-major [kh, kw, cin, cout] kernel viewed as a [kh*kw*cin, cout] matrix.
RowMatrix im2col(const ConvDims& d, const double* in) {
  const std::size_t cols = d.kh * d.kw * d.cin;
  RowMatrix p(static_cast<Eigen::Index>(d.batch * d.oh * d.ow), static_cast<Eigen::Index>(cols));
  double* dst = p.data();
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t y = 0; y < d.oh; ++y)
      for (std::size_t x = 0; x < d.ow; ++x)
        for (std::size_t dy = 0; dy < d.kh; ++dy)
          for (std::size_t dx = 0; dx < d.kw; ++dx) {
            const double* src = in + ((b * d.h + y + dy) * d.w + x + dx) * d.cin;
            dst = std::copy(src, src + d.cin, dst);
          }
  return p;
}

// out[b, y, x, o] += sum_{dy,dx,c} in[b, y+dy, x+dx, c] * k[dy, dx, c, o]
void conv_valid(const ConvDims& d, const double* in, const double* k, double* out) {
  const std::size_t rows = d.batch * d.oh * d.ow, cols = d.kh * d.kw * d.cin;
  mat(out, rows, d.cout).noalias() += im2col(d, in) * cmat(k, cols, d.cout);
}

// in_grad[b, y+dy, x+dx, c] += sum_o g[b, y, x, o] * k[dy, dx, c, o]
void conv_valid_input_grad(const ConvDims& d, const double* g, const double* k, double* in_grad) {
  const std::size_t rows = d.batch * d.oh * d.ow, cols = d.kh * d.kw * d.cin;
  const RowMatrix dp = cmat(g, rows, d.cout) * cmat(k, cols, d.cout).transpose();
  const double* src = dp.data();
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t y = 0; y < d.oh; ++y)
      for (std::size_t x = 0; x < d.ow; ++x)
        for (std::size_t dy = 0; dy < d.kh; ++dy)
          for (std::size_t dx = 0; dx < d.kw; ++dx) {
            double* dst = in_grad + ((b * d.h + y + dy) * d.w + x + dx) * d.cin;
            for (std::size_t c = 0; c < d.cin; ++c) dst[c] += *src++;
          }
}

// k_grad[dy, dx, c, o] += sum in[b, y+dy, x+dx, c] * g[b, y, x, o]
void conv_valid_kernel_grad(const ConvDims& d, const double* in, const double* g, double* k_grad) {
  const std::size_t rows = d.batch * d.oh * d.ow, cols = d.kh * d.kw * d.cin;
  mat(k_grad, cols, d.cout).noalias() += im2col(d, in).transpose() * cmat(g, rows, d.cout);
}

}  // namespace

Var conv2d(Var input, Var kernel) {
  const Shape& si = input.shape();
  const Shape& sk = kernel.shape();
  check_rank("conv2d input", si, 4);
  check_rank("conv2d kernel", sk, 4);
  if (sk[2] != si[3] || sk[0] > si[1] || sk[1] > si[2] || sk[0] == 0 || sk[1] == 0) {
    throw DimensionError("conv2d: kernel " + to_string(sk) + " incompatible with input " + to_string(si));
  }
  const ConvDims d{si[0], si[1], si[2], si[3], sk[0], sk[1], sk[3], si[1] - sk[0] + 1, si[2] - sk[1] + 1};
  return input.graph().record(
      "conv2d", {input, kernel},
      [d](const Inputs& in) {
        Tensor out(Shape{d.batch, d.oh, d.ow, d.cout});
        conv_valid(d, in[0]->data().data(), in[1]->data().data(), out.data().data());
        return out;
      },
      [d](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        if (gin[0]) conv_valid_input_grad(d, g.data().data(), in[1]->data().data(), gin[0]->data().data());
        if (gin[1]) conv_valid_kernel_grad(d, in[0]->data().data(), g.data().data(), gin[1]->data().data());
      });
}

Var conv2d_transpose(Var input, Var kernel) {
  const Shape& si = input.shape();
  const Shape& sk = kernel.shape();
  check_rank("conv2d_transpose input", si, 4);
  check_rank("conv2d_transpose kernel", sk, 4);
  if (sk[3] != si[3] || sk[0] == 0 || sk[1] == 0) {
    throw DimensionError("conv2d_transpose: kernel " + to_string(sk) + " incompatible with input " + to_string(si));
  }
  // Viewed as the valid convolution whose output is `input`: that convolution
  // maps [B, H+KH-1, W+KW-1, Cout] -> [B, H, W, Cin] with kernel [KH,KW,Cout,Cin].
  const ConvDims d{si[0], si[1] + sk[0] - 1, si[2] + sk[1] - 1, sk[2], sk[0], sk[1], si[3], si[1], si[2]};
  return input.graph().record(
      "conv2d_transpose", {input, kernel},
      [d](const Inputs& in) {
        Tensor out(Shape{d.batch, d.h, d.w, d.cin});
        conv_valid_input_grad(d, in[0]->data().data(), in[1]->data().data(), out.data().data());
        return out;
      },
      [d](const Inputs& in, const Tensor&, const Tensor& g, Grads& gin) {
        if (gin[0]) conv_valid(d, g.data().data(), in[1]->data().data(), gin[0]->data().data());
        if (gin[1]) conv_valid_kernel_grad(d, g.data().data(), in[0]->data().data(), gin[1]->data().data());
      });
}

Var batch_mean(Var a) {
  const std::size_t f = feature_count("batch_mean", a.shape());
  const std::size_t rows = a.value().size() / f;
  if (rows == 0) throw DimensionError("batch_mean of an empty batch");
  return a.graph().record(
      "batch_mean", {a},
      [f, rows](const Inputs& in) {
        Tensor out(Shape{f});
        auto x = in[0]->data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < f; ++j) out[j] += x[r * f + j];
        for (auto& v : out.data()) v /= static_cast<double>(rows);
        return out;
      },
      [f, rows](const Inputs&, const Tensor&, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        auto gx = gin[0]->data();
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < f; ++j) gx[r * f + j] += g[j] * inv;
      });
}

namespace {

Tensor feature_means(std::span<const double> x, std::size_t f, std::size_t rows) {
  Tensor m(Shape{f});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < f; ++j) m[j] += x[r * f + j];
  for (auto& v : m.data()) v /= static_cast<double>(rows);
  return m;
}

}  // namespace

Var batch_std(Var a, double eps) {
  const std::size_t f = feature_count("batch_std", a.shape());
  const std::size_t rows = a.value().size() / f;
  if (rows == 0) throw DimensionError("batch_std of an empty batch");
  return a.graph().record(
      "batch_std", {a},
      [f, rows, eps](const Inputs& in) {
        auto x = in[0]->data();
        const Tensor m = feature_means(x, f, rows);
        Tensor out(Shape{f});
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < f; ++j) {
            const double d = x[r * f + j] - m[j];
            out[j] += d * d;
          }
        for (auto& v : out.data()) v = std::sqrt(v / static_cast<double>(rows) + eps);
        return out;
      },
      [f, rows](const Inputs& in, const Tensor& out, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        auto x = in[0]->data();
        const Tensor m = feature_means(x, f, rows);
        auto gx = gin[0]->data();
        const double n = static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < f; ++j) gx[r * f + j] += g[j] * (x[r * f + j] - m[j]) / (n * out[j]);
      });
}

namespace {

Tensor log_softmax_rows(const Tensor& logits) {
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = logits.data().data() + r * k;
    double* y = out.data().data() + r * k;
    const double mx = *std::max_element(x, x + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(x[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < k; ++j) y[j] = x[j] - lse;
  }
  return out;
}

void check_logits(std::string_view op, const Shape& s) {
  if (s.size() != 2 || s[1] == 0) throw DimensionError(std::string(op) + ": expected [batch, classes], got " + to_string(s));
}

}  // namespace

Var log_softmax(Var logits) {
  check_logits("log_softmax", logits.shape());
  return logits.graph().record(
      "log_softmax", {logits}, [](const Inputs& in) { return log_softmax_rows(*in[0]); },
      [](const Inputs&, const Tensor& out, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        const std::size_t rows = out.dim(0), k = out.dim(1);
        for (std::size_t r = 0; r < rows; ++r) {
          double gs = 0.0;
          for (std::size_t j = 0; j < k; ++j) gs += g[r * k + j];
          for (std::size_t j = 0; j < k; ++j) (*gin[0])[r * k + j] += g[r * k + j] - std::exp(out[r * k + j]) * gs;
        }
      });
}

Var softmax(Var logits) {
  check_logits("softmax", logits.shape());
  return logits.graph().record(
      "softmax", {logits},
      [](const Inputs& in) {
        const Tensor& x = *in[0];
        const std::size_t rows = x.dim(0), k = x.dim(1);
        Tensor out(x.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          const double* xr = x.data().data() + r * k;
          double* y = out.data().data() + r * k;
          const double mx = *std::max_element(xr, xr + k);
          double s = 0.0;
          for (std::size_t j = 0; j < k; ++j) s += (y[j] = std::exp(xr[j] - mx));
          for (std::size_t j = 0; j < k; ++j) y[j] /= s;
        }
        return out;
      },
      [](const Inputs&, const Tensor& out, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        const std::size_t rows = out.dim(0), k = out.dim(1);
        for (std::size_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * out[r * k + j];
          for (std::size_t j = 0; j < k; ++j) (*gin[0])[r * k + j] += out[r * k + j] * (g[r * k + j] - dot);
        }
      });
}

Var nll(Var log_probs, std::vector<int> targets) {
  check_logits("nll", log_probs.shape());
  const std::size_t rows = log_probs.shape()[0], k = log_probs.shape()[1];
  if (targets.size() != rows) {
    throw DimensionError("nll: " + std::to_string(targets.size()) + " targets for " + std::to_string(rows) + " rows");
  }
  if (rows == 0) throw PreconditionError("nll: empty batch");
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw PreconditionError("target class " + std::to_string(t) + " out of range [0," + std::to_string(k) + ")");
    }
  }
  return log_probs.graph().record(
      "nll", {log_probs},
      [targets, k](const Inputs& in) {
        double s = 0.0;
        for (std::size_t r = 0; r < targets.size(); ++r) s -= (*in[0])[r * k + static_cast<std::size_t>(targets[r])];
        return Tensor::scalar(s / static_cast<double>(targets.size()));
      },
      [targets, k](const Inputs&, const Tensor&, const Tensor& g, Grads& gin) {
        if (!gin[0]) return;
        const double w = g[0] / static_cast<double>(targets.size());
        for (std::size_t r = 0; r < targets.size(); ++r) (*gin[0])[r * k + static_cast<std::size_t>(targets[r])] -= w;
      });
}

Var cross_entropy(Var logits, std::vector<int> targets) { return nll(log_softmax(logits), std::move(targets)); }

Var add_gaussian_noise(Var x, double stddev, Rng& rng) {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    throw ConfigError("noise standard deviation must be finite and >= 0, got " + std::to_string(stddev));
  }
  if (stddev == 0.0) return x;
  return add(x, x.graph().constant(rng.normal_tensor(x.shape(), stddev)));
}

Var batchnorm(Var x, BnMode mode, RunningStats* running, double eps) {
  const std::size_t f = feature_count("batchnorm", x.shape());
  Graph& g = x.graph();
  if (mode == BnMode::eval) {
    if (running == nullptr || running->mean.size() != f || running->var.size() != f) {
      throw PreconditionError("batchnorm eval mode needs running statistics for " + std::to_string(f) + " features");
    }
    Tensor stddev(Shape{f});
    for (std::size_t j = 0; j < f; ++j) stddev[j] = std::sqrt(running->var[j] + eps);
    return div(sub(x, g.constant(running->mean)), g.constant(std::move(stddev)));
  }
  if (x.shape().size() < 2 || x.shape()[0] < 2) {
    throw PreconditionError("batchnorm train mode needs a batch of at least 2, got shape " + to_string(x.shape()));
  }
  Var m = batch_mean(x);
  Var s = batch_std(x, eps);
  if (running != nullptr) update_running_stats(*running, m.value(), s.value(), eps);
  return div(sub(x, m), s);
}

void update_running_stats(RunningStats& running, const Tensor& batch_mean, const Tensor& batch_std, double eps) {
  const std::size_t f = batch_mean.size();
  if (running.mean.size() != f) running = RunningStats(f);
  for (std::size_t j = 0; j < f; ++j) {
    const double var = batch_std[j] * batch_std[j] - eps;
    running.mean[j] = kBatchNormMomentum * running.mean[j] + (1.0 - kBatchNormMomentum) * batch_mean[j];
    running.var[j] = kBatchNormMomentum * running.var[j] + (1.0 - kBatchNormMomentum) * var;
  }
}

}  // namespace ladder
