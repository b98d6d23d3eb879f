#pragma once

// Gradient checks shared by the unit tests and the acceptance binary.

#include <ostream>
#include <vector>

#include "ladder/model.hpp"
#include "oracles.hpp"

namespace ladder::oracle {

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  ScalarFn fn;
  bool away_from_zero = false;
  double lo = -1.0;
  double hi = 1.0;
};

inline void PrintTo(const OpCase& c, std::ostream* os) { *os << c.name; }

inline GradCheck check_op(const OpCase& c, std::uint64_t seed = 2024) {
  Rng rng(seed);
  std::vector<Tensor> inputs;
  for (const auto& s : c.shapes) {
    inputs.push_back(c.away_from_zero ? random_away_from_zero(s, rng) : random_tensor(s, rng, c.lo, c.hi));
  }
  return check_gradients(c.fn, inputs);
}

inline const std::vector<int> kGradTargets{2, 0, 1, 2};

/// One case per differentiable op.
inline std::vector<OpCase> op_cases() {
  return {
      OpCase{"add", {{3, 4}, {3, 4}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, add(v[0], v[1])); }},
      OpCase{"add_broadcast", {{3, 4}, {4}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, add(v[0], v[1])); }},
      OpCase{"sub", {{2, 3, 2}, {3, 2}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, sub(v[0], v[1])); }},
      OpCase{"mul", {{3, 4}, {4}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, mul(v[0], v[1])); }},
      OpCase{"div", {{3, 4}, {3, 4}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, div(v[0], v[1])); }, true},
      OpCase{"scale", {{5}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, scale(v[0], -1.7)); }},
      OpCase{"square", {{2, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, square(v[0])); }},
      OpCase{"relu", {{4, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, relu(v[0])); }, true},
      OpCase{"sigmoid", {{4, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, sigmoid(v[0])); }, false, -4, 4},
      OpCase{"exp", {{4}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, exp(v[0])); }},
      OpCase{"sum", {{3, 2}}, [](Graph&, const std::vector<Var>& v) { return sum(v[0]); }},
      OpCase{"mean", {{3, 2}}, [](Graph&, const std::vector<Var>& v) { return mean(square(v[0])); }},
      OpCase{"reshape", {{2, 6}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, reshape(v[0], {3, 4})); }},
      OpCase{"slice_rows", {{5, 2}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, slice_rows(v[0], 1, 4)); }},
      OpCase{"matmul", {{3, 4}, {4, 2}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, matmul(v[0], v[1])); }},
      OpCase{"conv2d", {{2, 5, 4, 2}, {3, 3, 2, 3}},
             [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, conv2d(v[0], v[1])); }},
      OpCase{"conv2d_transpose", {{2, 3, 2, 3}, {3, 3, 2, 3}},
             [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, conv2d_transpose(v[0], v[1])); }},
      OpCase{"batch_mean", {{5, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, batch_mean(v[0])); }},
      OpCase{"batch_std", {{5, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, batch_std(v[0], 1e-6)); }},
      OpCase{"batch_std_spatial", {{2, 3, 3, 2}},
             [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, batch_std(v[0], 1e-6)); }},
      OpCase{"batchnorm", {{6, 3}},
             [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, batchnorm(v[0], BnMode::train, nullptr)); }},
      OpCase{"softmax", {{4, 3}}, [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, softmax(v[0])); }, false, -3, 3},
      OpCase{"log_softmax", {{4, 3}},
             [](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, log_softmax(v[0])); }, false, -3, 3},
      OpCase{"nll", {{4, 3}}, [](Graph&, const std::vector<Var>& v) { return nll(log_softmax(v[0]), kGradTargets); }, false, -3, 3},
      OpCase{"cross_entropy", {{4, 3}},
             [](Graph&, const std::vector<Var>& v) { return cross_entropy(v[0], kGradTargets); }, false, -3, 3}};
}

inline LadderSpec fc_spec(std::vector<double> lambdas = {1.0, 0.5, 0.2}) {
  LadderSpec s;
  s.layers = {{LayerKind::dense, 4, Activation::relu}, {LayerKind::softmax_head, 3, Activation::none}};
  s.noise_std = 0.3;
  s.lambdas = std::move(lambdas);
  s.input_shape = {3};
  return s;
}

inline LadderSpec conv_spec() {
  LadderSpec s;
  s.layers = {{LayerKind::conv3x3, 3, Activation::relu},
              {LayerKind::conv3x3, 2, Activation::relu},
              {LayerKind::softmax_head, 3, Activation::none}};
  s.noise_std = 0.3;
  s.lambdas = {0.7, 0.5, 0.3, 0.2};
  s.input_shape = {5, 5, 2};
  return s;
}

// Moves every parameter off its initial value so no term is trivially zero.
inline void perturb(LadderParams& p, Rng& rng, double amount = 0.3) {
  for (Parameter* q : p.all())
    for (auto& v : q->value.data()) v += amount * (2.0 * rng.uniform() - 1.0);
}

inline Var ladder_loss(Graph& g, LadderParams& p, const LadderSpec& spec, const Tensor& x, const std::vector<int>& targets,
                std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  const Var xv = g.constant(x);
  const auto noisy = corrupted_encoder(g, p, spec, xv, rng);
  const auto clean = clean_encoder(g, p, spec, xv, BnMode::train, false);
  const auto z_hat = decoder(g, p, spec, noisy, lowest_active_level(spec.lambdas));
  const Var rec = reconstruction_cost(g, clean, z_hat, spec.lambdas, spec.normalize_targets);
  const Var sup = supervised_cost(slice_rows(noisy.log_probs, 0, targets.size()), targets);
  return total_cost(rec, sup);
}

// Central differences on every parameter entry of the whole ladder loss.
inline double ladder_grad_error(const LadderSpec& spec, const Shape& xshape, std::uint64_t seed) {
  Rng rng(seed);
  LadderParams p = init_params(spec, rng);
  perturb(p, rng);
  const Tensor x = random_tensor(xshape, rng);
  const std::vector<int> targets{0, 2, 1};
  {
    Graph g;
    p.zero_grad();
    g.backward(ladder_loss(g, p, spec, x, targets, seed + 1));
  }
  double worst = 0.0;
  const double h = 1e-5;
  for (Parameter* q : p.all()) {
    for (std::size_t i = 0; i < q->value.size(); ++i) {
      const double saved = q->value[i];
      auto eval = [&](double v) {
        q->value[i] = v;
        Graph g;
        return ladder_loss(g, p, spec, x, targets, seed + 1).value().item();
      };
      const double numeric = (eval(saved + h) - eval(saved - h)) / (2.0 * h);
      q->value[i] = saved;
      worst = std::max(worst, relative_error(q->grad[i], numeric));
    }
  }
  return worst;
}

}  // namespace ladder::oracle
