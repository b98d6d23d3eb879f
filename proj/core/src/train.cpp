#include "ladder/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "ladder/error.hpp"
#include "ladder/format.hpp"

namespace ladder {
namespace {

constexpr std::uint64_t kInitSalt = 1;
constexpr std::uint64_t kBalanceSalt = 2;

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::ladder: return "ladder";
    case TrainMode::supervised_only: return "supervised-only";
    case TrainMode::sdae_pretrain: return "sdae-pretrain";
  }
  return "?";
}

std::string to_string(LrDecay decay) { return decay == LrDecay::linear ? "linear" : "none"; }

void TrainConfig::validate() const {
  ladder.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
    throw ConfigError("Adam needs 0 <= beta1, beta2 < 1 and epsilon > 0");
  }
  if (!(decay_fraction > 0.0 && decay_fraction <= 1.0)) throw ConfigError("decay_fraction must be in (0, 1]");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
  if (eval_batch == 0) throw ConfigError("eval_batch must be >= 1");
}

Trainer::Trainer(TrainConfig config, const PatchSet& data, const SemiSplit& split)
    : config_(std::move(config)), data_(data), adam_(config_.adam), rng_(config_.seed) {
  if (config_.ladder.input_shape.empty()) config_.ladder.input_shape = data.sample_shape();
  config_.validate();
  if (config_.ladder.input_shape != data.sample_shape()) {
    throw DimensionError("model input shape " + to_string(config_.ladder.input_shape) + " does not match data samples " +
                         to_string(data.sample_shape()));
  }
  if (static_cast<int>(config_.ladder.num_classes()) != data.num_classes) {
    throw ConfigError("softmax head has " + std::to_string(config_.ladder.num_classes()) + " classes, data has " +
                      std::to_string(data.num_classes));
  }
  check_split(split, data.labels);
  if (split.labeled_train.empty()) throw PreconditionError("split has no labeled training samples");

  labeled_pool_ = split.labeled_train;
  if (split.labels_per_class == kAllLabels && config_.balance != BalanceStrategy::none) {
    Rng balance_rng(Rng::derive_seed(config_.seed, kBalanceSalt));
    labeled_pool_ = balance_labels(split.labeled_train, data.labels, config_.balance, balance_rng);
  }
  unlabeled_pool_ = split.unlabeled_train.empty() ? split.labeled_train : split.unlabeled_train;

  Rng init_rng(Rng::derive_seed(config_.seed, kInitSalt));
  params_ = init_params(config_.ladder, init_rng);
}

double Trainer::current_learning_rate() const {
  if (config_.lr_decay == LrDecay::none || config_.iterations == 0) return config_.learning_rate;
  const double total = static_cast<double>(config_.iterations);
  const double remaining = total - static_cast<double>(iteration_);
  return config_.learning_rate * std::clamp(remaining / (config_.decay_fraction * total), 0.0, 1.0);
}

LossPoint Trainer::step() {
  const std::size_t b = config_.batch_size;
  std::vector<std::size_t> idx(2 * b);
  std::vector<int> targets(b);
  for (std::size_t i = 0; i < b; ++i) {
    idx[i] = labeled_pool_[rng_.uniform_index(labeled_pool_.size())];
    targets[i] = data_.labels[idx[i]];
  }
  for (std::size_t i = 0; i < b; ++i) idx[b + i] = unlabeled_pool_[rng_.uniform_index(unlabeled_pool_.size())];

  const LadderSpec& spec = config_.ladder;
  std::vector<double> lambdas = spec.lambdas;
  if (config_.mode != TrainMode::ladder) lambdas.assign(lambdas.size(), 0.0);

  Graph g;
  Var x = g.constant(gather_rows(data_.patches, idx));
  EncoderPass corrupted = corrupted_encoder(g, params_, spec, x, rng_);
  EncoderPass clean = clean_encoder(g, params_, spec, x, BnMode::train, true);
  Var c_super = supervised_cost(slice_rows(corrupted.log_probs, 0, b), std::move(targets));

  const std::size_t lowest = lowest_active_level(lambdas);
  Var c_recon = lowest < spec.levels()
                    ? reconstruction_cost(g, clean, decoder(g, params_, spec, corrupted, lowest), lambdas,
                                          spec.normalize_targets)
                    : g.constant(Tensor::scalar(0.0));
  Var total = total_cost(c_recon, c_super);

  params_.zero_grad();
  g.backward(total);
  auto all = params_.all();
  if (config_.grad_clip > 0.0) clip_grad_norm(all, config_.grad_clip);
  adam_.step(all, current_learning_rate());
  ++iteration_;

  LossPoint p{c_super.value().item(), c_recon.value().item(), total.value().item()};
  curve_.push_back(p);
  return p;
}

void Trainer::pretrain_layers() {
  // Layer-wise denoising autoencoders on unlabeled data; lower layers frozen.
  const LadderSpec& spec = config_.ladder;
  const std::size_t b = 2 * config_.batch_size;
  for (std::size_t l = 1; l < spec.depth(); ++l) {
    Adam adam(config_.adam);
    auto& layer = params_.encoder[l - 1];
    std::vector<Parameter*> trainable{&layer.weight, &layer.gamma, &layer.beta, &params_.decoder[l - 1]};
    for (std::size_t it = 0; it < config_.pretrain_iterations; ++it) {
      std::vector<std::size_t> idx(b);
      for (auto& i : idx) i = unlabeled_pool_[rng_.uniform_index(unlabeled_pool_.size())];
      Graph g;
      Var h = g.constant(gather_rows(data_.patches, idx));
      for (std::size_t k = 1; k < l; ++k) {
        auto& lower = params_.encoder[k - 1];
        Var z = batchnorm(encoder_linear(g, params_, spec, k, h), BnMode::train, &lower.running);
        Var a = mul(add(z, g.param(lower.beta)), g.param(lower.gamma));
        h = spec.layers[k - 1].activation == Activation::relu ? relu(a) : a;
      }
      Var target = g.constant(h.value());
      Var noisy = add_gaussian_noise(target, spec.noise_std, rng_);
      Var z = batchnorm(encoder_linear(g, params_, spec, l, noisy), BnMode::train, &layer.running);
      Var a = mul(add(z, g.param(layer.beta)), g.param(layer.gamma));
      Var code = spec.layers[l - 1].activation == Activation::relu ? relu(a) : a;
      Var loss = mean(square(sub(decoder_linear(g, params_, spec, l, code), target)));
      for (auto* p : trainable) p->zero_grad();
      g.backward(loss);
      adam.step(trainable, config_.learning_rate);
    }
  }
  pretrained_ = true;
}

void Trainer::run(std::size_t iterations) {
  if (config_.mode == TrainMode::sdae_pretrain && !pretrained_ && iteration_ == 0) pretrain_layers();
  while (iteration_ < iterations) {
    step();
    if (!std::isfinite(curve_.back().c_total)) {
      throw NumericError("training diverged at iteration " + std::to_string(iteration_));
    }
    if (config_.checkpoint_every > 0 && !config_.checkpoint_path.empty() && iteration_ % config_.checkpoint_every == 0) {
      save_checkpoint(config_.checkpoint_path, checkpoint());
    }
  }
}

Checkpoint Trainer::checkpoint() const { return capture_checkpoint(params_, adam_, rng_, iteration_); }

void Trainer::restore(const Checkpoint& ckpt) {
  restore_checkpoint(ckpt, params_, &adam_, &rng_);
  iteration_ = static_cast<std::size_t>(ckpt.iteration);
  pretrained_ = true;
  curve_.clear();
}

Metrics evaluate(LadderParams& params, const LadderSpec& spec, const PatchSet& data, std::span<const std::size_t> indices,
                 std::size_t batch) {
  if (indices.empty()) throw PreconditionError("evaluation set is empty");
  if (batch == 0) batch = indices.size();
  std::vector<int> truth, predicted;
  truth.reserve(indices.size());
  predicted.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch) {
    const std::size_t end = std::min(indices.size(), start + batch);
    std::span<const std::size_t> chunk = indices.subspan(start, end - start);
    auto pred = predict(params, spec, gather_rows(data.patches, chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const int t = data.labels[chunk[i]];
      if (t < 0) throw PreconditionError("evaluation set contains a background sample");
      truth.push_back(t);
      predicted.push_back(pred[i]);
    }
  }
  return compute_metrics(truth, predicted, static_cast<int>(spec.num_classes()));
}

TrainResult train(const TrainConfig& config, const PatchSet& data, const SemiSplit& split) {
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(config, data, split);
  trainer.run();
  TrainResult result;
  result.report.metrics =
      evaluate(trainer.params(), trainer.config().ladder, data, split.test, trainer.config().eval_batch);
  result.report.curve = trainer.curve();
  result.final_state = trainer.checkpoint();
  result.report.seed = config.seed;
  result.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.params = std::move(trainer.params());
  return result;
}

std::string format_report(const TrainReport& report) {
  const Metrics& m = report.metrics;
  std::ostringstream os;
  os << "# ladder training report\n";
  os << "seed = " << report.seed << '\n';
  os << "iterations = " << report.curve.size() << '\n';
  os << "oa = " << format_double(m.overall_accuracy) << '\n';
  os << "aa = " << format_double(m.average_accuracy) << '\n';
  os << "per_class_accuracy = " << join_doubles(m.per_class_accuracy) << '\n';
  os << "confusion = ";
  for (std::size_t i = 0; i < m.confusion.size(); ++i) {
    if (i) os << ';';
    for (std::size_t j = 0; j < m.confusion[i].size(); ++j) os << (j ? "," : "") << m.confusion[i][j];
  }
  os << '\n';
  if (!report.curve.empty()) {
    os << "final_c_super = " << format_double(report.curve.back().c_super) << '\n';
    os << "final_c_recon = " << format_double(report.curve.back().c_recon) << '\n';
    os << "final_c_total = " << format_double(report.curve.back().c_total) << '\n';
  }
  os << "seconds = " << format_double(report.seconds) << '\n';
  if (!report.config_echo.empty()) os << "config = " << report.config_echo << '\n';
  return os.str();
}

std::string format_loss_curve(const TrainReport& report) {
  std::ostringstream os;
  os << "iteration,c_super,c_recon,c_total\n";
  for (std::size_t i = 0; i < report.curve.size(); ++i) {
    const auto& p = report.curve[i];
    os << i + 1 << ',' << format_double(p.c_super) << ',' << format_double(p.c_recon) << ',' << format_double(p.c_total)
       << '\n';
  }
  return os.str();
}

}  // namespace ladder
