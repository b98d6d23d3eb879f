#include "ladder/adam.hpp"

#include <cmath>

#include "ladder/error.hpp"

namespace ladder {

void Adam::step(std::span<Parameter* const> params, double learning_rate) {
  for (const auto* p : params) {
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p->name + "'");
    if (p->grad.shape() != p->value.shape()) throw DimensionError("gradient shape mismatch for '" + p->name + "'");
  }
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw PreconditionError("Adam state was built for a different parameter list");

  ++steps_;
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->value.data();
    auto g = params[i]->grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
    }
  }
}

void Adam::restore(std::int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != v.size()) throw PreconditionError("Adam restore: moment lists differ in length");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto* p : params)
      for (auto& g : p->grad.data()) g *= f;
  }
  return norm;
}

}  // namespace ladder
