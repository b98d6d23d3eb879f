#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ladder/graph.hpp"
#include "ladder/rng.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

enum class LayerKind { dense, conv3x3, softmax_head };
enum class Activation { relu, none };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t width = 1;
  Activation activation = Activation::relu;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Architecture of a ladder network.
///
/// Level 0 is the input; level l (1..L) is the output of layers[l-1]. The
/// last layer must be the softmax head, whose width is the class count.
/// `lambdas` holds one denoising-cost weight per level (L+1 entries).
struct LadderSpec {
  std::vector<LayerSpec> layers;
  double noise_std = 0.3;
  std::vector<double> lambdas;
  /// Per-sample input shape: {bands} for spectra or {w, w, c} for patches.
  Shape input_shape;
  /// Compare clean targets against the reconstruction renormalized with the
  /// clean batch statistics (true) or against the raw reconstruction.
  bool normalize_targets = true;

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t levels() const noexcept { return layers.size() + 1; }
  std::size_t num_classes() const;
  /// Per-sample shape at every level 0..L. Throws ConfigError when the stack is inconsistent.
  std::vector<Shape> level_shapes() const;
  void validate() const;

  friend bool operator==(const LadderSpec&, const LadderSpec&) = default;
};

struct EncoderLayer {
  Parameter weight;  // W: dense [in_units, out] or conv [3, 3, c_in, c_out]
  Parameter gamma;   // [features]
  Parameter beta;    // [features]
  RunningStats running;
};

/// The ten per-unit coefficients a1..a10 of the lateral combinator.
struct Combinator {
  std::array<Parameter, 10> a;
};

struct LadderParams {
  std::vector<EncoderLayer> encoder;    // encoder[l-1] produces level l
  std::vector<Parameter> decoder;       // decoder[l-1] = V(l), maps level l back to level l-1
  std::vector<Combinator> combinators;  // one per level 0..L

  /// Every trainable parameter in a fixed order.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  bool all_finite() const;
  void zero_grad();
};

inline constexpr std::array<double, 10> kCombinatorInit = {0, 1, 0, 0, 0, 0, 1, 0, 0, 1};

/// Gaussian weight init with std sqrt(2 / fan_in); gamma = 1, beta = 0,
/// combinator coefficients set to kCombinatorInit.
LadderParams init_params(const LadderSpec& spec, Rng& rng);

/// Everything one encoder pass exposes to the decoder and the costs.
struct EncoderPass {
  std::vector<Var> z;       // normalized (and corrupted, on the noisy path) pre-activations, levels 0..L
  std::vector<Var> mean;    // batch mean of the un-normalized pre-activation; invalid at level 0 and in eval mode
  std::vector<Var> stddev;  // matching batch std
  Var probs;                // softmax output of the head
  Var log_probs;
};

/// Noisy pass: noise on the input and on every normalized pre-activation.
EncoderPass corrupted_encoder(Graph& g, LadderParams& params, const LadderSpec& spec, Var x, Rng& rng);

/// Noise-free pass. In train mode batch statistics are used and recorded
/// (and folded into the running statistics when `update_running`); eval mode
/// uses the running statistics and accepts a batch of 1.
EncoderPass clean_encoder(Graph& g, LadderParams& params, const LadderSpec& spec, Var x, BnMode mode,
                          bool update_running = true);

/// Lateral combinator: z_hat = (z_tilde - mu(u)) * v(u) + mu(u) with
/// mu(u) = a1 sigmoid(a2 u + a3) + a4 u + a5 and
/// v(u)  = a6 sigmoid(a7 u + a8) + a9 u + a10, coefficients per unit.
Var combinator_g(Var z_tilde, Var u, Combinator& c);

/// Top-down pass from the corrupted encoder. Returns z_hat for levels
/// lowest_level..L; lower entries are left invalid.
std::vector<Var> decoder(Graph& g, LadderParams& params, const LadderSpec& spec, const EncoderPass& corrupted,
                         std::size_t lowest_level = 0);

/// Lowest level with a positive lambda, or levels() when every lambda is zero.
std::size_t lowest_active_level(std::span<const double> lambdas);

/// sum_l lambda_l * ||z_l - z_hat_l||^2 / (batch * units_l). With
/// `normalize`, z_hat_l is first mapped through (z_hat - mean_l) / std_l using
/// the clean pass statistics (identity at level 0).
Var reconstruction_cost(Graph& g, const EncoderPass& clean, const std::vector<Var>& z_hat,
                        std::span<const double> lambdas, bool normalize);

/// Mean negative log-likelihood of `targets` under `log_probs`.
Var supervised_cost(Var log_probs, std::vector<int> targets);

Var total_cost(Var c_recon, Var c_super);

/// Maps a level-(l-1) activation to the un-normalized level-l pre-activation (W(l) applied).
Var encoder_linear(Graph& g, LadderParams& params, const LadderSpec& spec, std::size_t level, Var h);
/// Applies V(l): level-l representation back to the level-(l-1) shape.
Var decoder_linear(Graph& g, LadderParams& params, const LadderSpec& spec, std::size_t level, Var z_hat);

/// Clean-path class log-probabilities in eval mode, [n, classes].
Tensor predict_log_probs(LadderParams& params, const LadderSpec& spec, const Tensor& x);
/// Argmax of the clean-path class probabilities.
std::vector<int> predict(LadderParams& params, const LadderSpec& spec, const Tensor& x);
/// Row-wise argmax.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace ladder
