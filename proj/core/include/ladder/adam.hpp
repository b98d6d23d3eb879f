#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ladder/graph.hpp"

namespace ladder {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

/// Bias-corrected Adam. Moment buffers are allocated on the first step and
/// matched to parameters by position.
class Adam {
 public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  /// One update from each parameter's `grad`. Throws NumericError naming
  /// the first parameter with a non-finite gradient; nothing is modified then.
  void step(std::span<Parameter* const> params, double learning_rate);

  std::int64_t steps() const noexcept { return steps_; }
  const AdamSettings& settings() const noexcept { return settings_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

  void restore(std::int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  AdamSettings settings_;
  std::int64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

}  // namespace ladder
