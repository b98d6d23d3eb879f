#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's op kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ladder/graph.hpp"
#include "ladder/rng.hpp"
#include "ladder/tensor.hpp"

namespace ladder::oracle {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Values bounded away from zero, for ops with a kink there.
inline Tensor random_away_from_zero(const Shape& shape, Rng& rng, double margin = 0.1) {
  Tensor t(shape);
  for (auto& v : t.data()) {
    const double m = margin + (1.0 - margin) * rng.uniform();
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  return c;
}

// x [B,H,W,Ci], k [KH,KW,Ci,Co], valid, stride 1.
inline Tensor conv2d(const Tensor& x, const Tensor& k) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t KH = k.dim(0), KW = k.dim(1), Co = k.dim(3);
  const std::size_t OH = H - KH + 1, OW = W - KW + 1;
  Tensor y(Shape{B, OH, OW, Co});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < OH; ++i)
      for (std::size_t j = 0; j < OW; ++j)
        for (std::size_t o = 0; o < Co; ++o) {
          double s = 0.0;
          for (std::size_t di = 0; di < KH; ++di)
            for (std::size_t dj = 0; dj < KW; ++dj)
              for (std::size_t c = 0; c < Ci; ++c)
                s += x[((b * H + i + di) * W + j + dj) * Ci + c] * k[((di * KW + dj) * Ci + c) * Co + o];
          y[((b * OH + i) * OW + j) * Co + o] = s;
        }
  return y;
}

// Scatter form: every input pixel spreads through the kernel.
// x [B,H,W,Ci], k [KH,KW,Co,Ci] -> [B,H+KH-1,W+KW-1,Co].
inline Tensor conv2d_transpose(const Tensor& x, const Tensor& k) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t KH = k.dim(0), KW = k.dim(1), Co = k.dim(2);
  const std::size_t OH = H + KH - 1, OW = W + KW - 1;
  Tensor y(Shape{B, OH, OW, Co});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t c = 0; c < Ci; ++c)
          for (std::size_t di = 0; di < KH; ++di)
            for (std::size_t dj = 0; dj < KW; ++dj)
              for (std::size_t o = 0; o < Co; ++o)
                y[((b * OH + i + di) * OW + j + dj) * Co + o] +=
                    x[((b * H + i) * W + j) * Ci + c] * k[((di * KW + dj) * Co + o) * Ci + c];
  return y;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar lateral combinator with coefficients a[0..9].
inline double combinator(double zt, double u, const double* a) {
  const double mu = a[0] * sigmoid(a[1] * u + a[2]) + a[3] * u + a[4];
  const double v = a[5] * sigmoid(a[6] * u + a[7]) + a[8] * u + a[9];
  return (zt - mu) * v + mu;
}

// Per-column normalization with biased variance.
inline Tensor batch_normalize(const Tensor& x, double eps) {
  const std::size_t f = x.shape().back(), n = x.size() / f;
  Tensor y(x.shape());
  for (std::size_t j = 0; j < f; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x[i * f + j];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x[i * f + j] - m) * (x[i * f + j] - m);
    v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y[i * f + j] = (x[i * f + j] - m) / std::sqrt(v + eps);
  }
  return y;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor); the floor keeps exact zeros comparable.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

using ScalarFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Central differences (step h) on every entry of every input against
// reverse-mode gradients of the scalar built by `f`.
inline GradCheck check_gradients(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5, double floor = 1e-6) {
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.leaf(t));
  g.backward(f(g, leaves));
  GradCheck result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = leaves[k].grad();
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        auto shifted = inputs;
        shifted[k][i] += delta;
        Graph g2;
        std::vector<Var> vs;
        for (const auto& t : shifted) vs.push_back(g2.constant(t));
        return f(g2, vs).value().item();
      };
      const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric, floor));
      ++result.checked;
    }
  }
  return result;
}

// Reduces a tensor to a scalar with fixed random weights so every output
// entry gets a distinct upstream gradient.
inline Var weighted_sum(Graph& g, Var y, std::uint64_t seed = 99) {
  Rng rng(seed);
  return sum(mul(y, g.constant(random_tensor(y.shape(), rng, 0.5, 1.5))));
}

}  // namespace ladder::oracle
