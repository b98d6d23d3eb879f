#include "ladder/model.hpp"

#include <algorithm>
#include <cmath>

#include "ladder/error.hpp"

namespace ladder {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::softmax_head: return "softmax";
  }
  return "?";
}

std::string to_string(Activation act) { return act == Activation::relu ? "relu" : "none"; }

std::size_t LadderSpec::num_classes() const {
  if (layers.empty()) throw ConfigError("ladder has no layers");
  return layers.back().width;
}

std::vector<Shape> LadderSpec::level_shapes() const {
  if (input_shape.empty() || numel(input_shape) == 0) throw ConfigError("input shape is not set");
  if (input_shape.size() != 1 && input_shape.size() != 3) {
    throw ConfigError("input shape must be {bands} or {w, w, c}, got " + to_string(input_shape));
  }
  std::vector<Shape> shapes{input_shape};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const Shape& below = shapes.back();
    if (layer.width == 0) throw ConfigError("layer " + std::to_string(i + 1) + " has width 0");
    if (layer.kind == LayerKind::conv3x3) {
      if (below.size() != 3) throw ConfigError("conv3x3 layer " + std::to_string(i + 1) + " needs a spatial input");
      if (below[0] < 3 || below[1] < 3) {
        throw ConfigError("conv3x3 layer " + std::to_string(i + 1) + " input " + to_string(below) + " is smaller than 3x3");
      }
      shapes.push_back({below[0] - 2, below[1] - 2, layer.width});
    } else {
      shapes.push_back({layer.width});
    }
  }
  return shapes;
}

void LadderSpec::validate() const {
  if (layers.empty()) throw ConfigError("ladder needs at least the softmax head");
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::softmax_head) throw ConfigError("softmax head must be the last layer");
  }
  if (layers.back().kind != LayerKind::softmax_head) throw ConfigError("last layer must be the softmax head");
  if (layers.back().width < 2) throw ConfigError("softmax head needs at least 2 classes");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("noise_std must be finite and >= 0");
  if (lambdas.size() != levels()) {
    throw ConfigError("lambdas has " + std::to_string(lambdas.size()) + " entries, ladder has " +
                      std::to_string(levels()) + " levels");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must be finite and >= 0");
  }
  if (!input_shape.empty()) (void)level_shapes();
}

std::vector<Parameter*> LadderParams::all() {
  std::vector<Parameter*> out;
  for (auto& e : encoder) {
    out.push_back(&e.weight);
    out.push_back(&e.gamma);
    out.push_back(&e.beta);
  }
  for (auto& v : decoder) out.push_back(&v);
  for (auto& c : combinators)
    for (auto& a : c.a) out.push_back(&a);
  return out;
}

std::vector<const Parameter*> LadderParams::all() const {
  auto mut = const_cast<LadderParams*>(this)->all();
  return {mut.begin(), mut.end()};
}

bool LadderParams::all_finite() const {
  for (const auto* p : all())
    if (!p->value.all_finite()) return false;
  return true;
}

void LadderParams::zero_grad() {
  for (auto* p : all()) p->zero_grad();
}

namespace {

std::size_t features_of(const Shape& s) { return s.back(); }

Shape batched(std::size_t batch, const Shape& s) {
  Shape out{batch};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

LadderParams init_params(const LadderSpec& spec, Rng& rng) {
  spec.validate();
  const auto shapes = spec.level_shapes();
  LadderParams p;
  for (std::size_t l = 1; l <= spec.depth(); ++l) {
    const auto& layer = spec.layers[l - 1];
    const Shape& below = shapes[l - 1];
    const std::size_t f = features_of(shapes[l]);
    const std::string pre = "encoder." + std::to_string(l) + ".";
    EncoderLayer e;
    if (layer.kind == LayerKind::conv3x3) {
      const std::size_t cin = below[2];
      e.weight = Parameter(pre + "weight", rng.normal_tensor({3, 3, cin, f}, std::sqrt(2.0 / static_cast<double>(9 * cin))));
    } else {
      const std::size_t in = numel(below);
      e.weight = Parameter(pre + "weight", rng.normal_tensor({in, f}, std::sqrt(2.0 / static_cast<double>(in))));
    }
    e.gamma = Parameter(pre + "gamma", Tensor({f}, 1.0));
    e.beta = Parameter(pre + "beta", Tensor({f}, 0.0));
    e.running = RunningStats(f);
    p.encoder.push_back(std::move(e));
  }
  for (std::size_t l = 1; l <= spec.depth(); ++l) {
    const auto& layer = spec.layers[l - 1];
    const std::string name = "decoder." + std::to_string(l) + ".weight";
    if (layer.kind == LayerKind::conv3x3) {
      const std::size_t c_hi = shapes[l][2], c_lo = shapes[l - 1][2];
      p.decoder.emplace_back(name, rng.normal_tensor({3, 3, c_lo, c_hi}, std::sqrt(2.0 / static_cast<double>(9 * c_hi))));
    } else {
      const std::size_t hi = numel(shapes[l]), lo = numel(shapes[l - 1]);
      p.decoder.emplace_back(name, rng.normal_tensor({hi, lo}, std::sqrt(2.0 / static_cast<double>(hi))));
    }
  }
  for (std::size_t l = 0; l < spec.levels(); ++l) {
    Combinator c;
    for (std::size_t i = 0; i < 10; ++i) {
      c.a[i] = Parameter("combinator." + std::to_string(l) + ".a" + std::to_string(i + 1), Tensor(shapes[l], kCombinatorInit[i]));
    }
    p.combinators.push_back(std::move(c));
  }
  return p;
}

Var encoder_linear(Graph& g, LadderParams& params, const LadderSpec& spec, std::size_t level, Var h) {
  const auto& layer = spec.layers.at(level - 1);
  Var w = g.param(params.encoder.at(level - 1).weight);
  if (layer.kind == LayerKind::conv3x3) return conv2d(h, w);
  const std::size_t batch = h.shape()[0];
  if (h.shape().size() != 2) h = reshape(h, {batch, h.value().size() / batch});
  return matmul(h, w);
}

Var decoder_linear(Graph& g, LadderParams& params, const LadderSpec& spec, std::size_t level, Var z_hat) {
  const auto& layer = spec.layers.at(level - 1);
  Var v = g.param(params.decoder.at(level - 1));
  if (layer.kind == LayerKind::conv3x3) return conv2d_transpose(z_hat, v);
  const Shape lower = spec.level_shapes().at(level - 1);
  const std::size_t batch = z_hat.shape()[0];
  Var out = matmul(reshape(z_hat, {batch, z_hat.value().size() / batch}), v);
  return lower.size() == 1 ? out : reshape(out, batched(batch, lower));
}

namespace {

EncoderPass encode(Graph& g, LadderParams& params, const LadderSpec& spec, Var x, double noise_std, Rng* rng,
                   BnMode mode, bool update_running) {
  if (x.shape().size() != spec.input_shape.size() + 1 ||
      !std::equal(spec.input_shape.begin(), spec.input_shape.end(), x.shape().begin() + 1)) {
    throw DimensionError("encoder input " + to_string(x.shape()) + " does not match per-sample shape " +
                         to_string(spec.input_shape));
  }
  const std::size_t batch = x.shape()[0];
  if (mode == BnMode::train && batch < 2) {
    throw PreconditionError("training-mode encoder pass needs a batch of at least 2, got " + std::to_string(batch));
  }
  if (batch == 0) throw PreconditionError("empty batch");
  if (params.encoder.size() != spec.depth()) throw ConfigError("parameters do not match the ladder depth");

  EncoderPass pass;
  pass.z.resize(spec.levels());
  pass.mean.resize(spec.levels());
  pass.stddev.resize(spec.levels());

  Var h = rng ? add_gaussian_noise(x, noise_std, *rng) : x;
  pass.z[0] = h;
  for (std::size_t l = 1; l <= spec.depth(); ++l) {
    auto& layer = params.encoder[l - 1];
    Var pre = encoder_linear(g, params, spec, l, h);
    Var z;
    if (mode == BnMode::train) {
      Var m = batch_mean(pre);
      Var s = batch_std(pre, kBatchNormEps);
      if (update_running) update_running_stats(layer.running, m.value(), s.value());
      pass.mean[l] = m;
      pass.stddev[l] = s;
      z = div(sub(pre, m), s);
    } else {
      z = batchnorm(pre, BnMode::eval, &layer.running);
    }
    if (rng) z = add_gaussian_noise(z, noise_std, *rng);
    pass.z[l] = z;

    Var a = mul(add(z, g.param(layer.beta)), g.param(layer.gamma));
    const auto& ls = spec.layers[l - 1];
    if (ls.kind == LayerKind::softmax_head) {
      pass.log_probs = log_softmax(a);
      pass.probs = exp(pass.log_probs);
    } else {
      h = ls.activation == Activation::relu ? relu(a) : a;
    }
  }
  return pass;
}

Var batch_normalize(Var x) { return div(sub(x, batch_mean(x)), batch_std(x, kBatchNormEps)); }

}  // namespace

EncoderPass corrupted_encoder(Graph& g, LadderParams& params, const LadderSpec& spec, Var x, Rng& rng) {
  return encode(g, params, spec, x, spec.noise_std, &rng, BnMode::train, false);
}

EncoderPass clean_encoder(Graph& g, LadderParams& params, const LadderSpec& spec, Var x, BnMode mode,
                          bool update_running) {
  return encode(g, params, spec, x, 0.0, nullptr, mode, update_running);
}

Var combinator_g(Var z_tilde, Var u, Combinator& c) {
  if (z_tilde.shape() != u.shape()) {
    throw DimensionError("combinator: z_tilde " + to_string(z_tilde.shape()) + " vs u " + to_string(u.shape()));
  }
  Graph& g = z_tilde.graph();
  std::array<Var, 10> a;
  for (std::size_t i = 0; i < 10; ++i) a[i] = g.param(c.a[i]);
  Var mu = add(add(mul(sigmoid(add(mul(u, a[1]), a[2])), a[0]), mul(u, a[3])), a[4]);
  Var v = add(add(mul(sigmoid(add(mul(u, a[6]), a[7])), a[5]), mul(u, a[8])), a[9]);
  return add(mul(sub(z_tilde, mu), v), mu);
}

std::size_t lowest_active_level(std::span<const double> lambdas) {
  for (std::size_t l = 0; l < lambdas.size(); ++l)
    if (lambdas[l] > 0.0) return l;
  return lambdas.size();
}

std::vector<Var> decoder(Graph& g, LadderParams& params, const LadderSpec& spec, const EncoderPass& corrupted,
                         std::size_t lowest_level) {
  const std::size_t L = spec.depth();
  if (corrupted.z.size() != spec.levels() || !corrupted.probs.valid()) {
    throw PreconditionError("decoder needs a complete corrupted encoder pass");
  }
  if (params.combinators.size() != spec.levels()) throw ConfigError("parameters do not match the ladder depth");
  std::vector<Var> z_hat(spec.levels());
  if (lowest_level > L) return z_hat;

  Var u = batch_normalize(corrupted.probs);
  for (std::size_t l = L + 1; l-- > lowest_level;) {
    if (l < L) u = batch_normalize(decoder_linear(g, params, spec, l + 1, z_hat[l + 1]));
    z_hat[l] = combinator_g(corrupted.z[l], u, params.combinators[l]);
  }
  return z_hat;
}

Var reconstruction_cost(Graph& g, const EncoderPass& clean, const std::vector<Var>& z_hat,
                        std::span<const double> lambdas, bool normalize) {
  if (lambdas.size() != clean.z.size()) {
    throw ConfigError("lambdas has " + std::to_string(lambdas.size()) + " entries for " + std::to_string(clean.z.size()) +
                      " levels");
  }
  Var total;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    if (lambdas[l] == 0.0) continue;
    if (l >= z_hat.size() || !z_hat[l].valid()) {
      throw PreconditionError("no reconstruction for level " + std::to_string(l));
    }
    Var target = clean.z[l];
    Var est = z_hat[l];
    if (target.shape() != est.shape()) {
      throw DimensionError("level " + std::to_string(l) + " target " + to_string(target.shape()) + " vs reconstruction " +
                           to_string(est.shape()));
    }
    if (normalize && l > 0) {
      if (!clean.mean[l].valid() || !clean.stddev[l].valid()) {
        throw PreconditionError("normalized reconstruction cost needs clean batch statistics at level " + std::to_string(l));
      }
      est = div(sub(est, clean.mean[l]), clean.stddev[l]);
    }
    const double denom = static_cast<double>(target.value().size());  // batch * units
    Var term = scale(sum(square(sub(target, est))), lambdas[l] / denom);
    total = total.valid() ? add(total, term) : term;
  }
  return total.valid() ? total : g.constant(Tensor::scalar(0.0));
}

Var supervised_cost(Var log_probs, std::vector<int> targets) {
  if (targets.empty()) throw PreconditionError("supervised cost needs at least one labeled example");
  return nll(log_probs, std::move(targets));
}

Var total_cost(Var c_recon, Var c_super) { return add(c_super, c_recon); }

Tensor predict_log_probs(LadderParams& params, const LadderSpec& spec, const Tensor& x) {
  if (!params.all_finite()) throw NumericError("model parameters contain NaN/Inf");
  for (const auto& e : params.encoder) {
    if (!e.running.mean.all_finite() || !e.running.var.all_finite()) throw NumericError("running statistics contain NaN/Inf");
  }
  Graph g;
  Var in = g.constant(x);
  auto pass = clean_encoder(g, params, spec, in, BnMode::eval, false);
  return pass.log_probs.value();
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw DimensionError("argmax_rows expects [n, k], got " + to_string(scores.shape()));
  const std::size_t n = scores.dim(0), k = scores.dim(1);
  std::vector<int> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = scores.data().data() + r * k;
    out[r] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

std::vector<int> predict(LadderParams& params, const LadderSpec& spec, const Tensor& x) {
  return argmax_rows(predict_log_probs(params, spec, x));
}

}  // namespace ladder
