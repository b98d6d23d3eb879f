#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ladder/adam.hpp"
#include "ladder/checkpoint.hpp"
#include "ladder/hsi.hpp"
#include "ladder/metrics.hpp"
#include "ladder/model.hpp"
#include "ladder/rng.hpp"
#include "ladder/split.hpp"

namespace ladder {

enum class TrainMode { ladder, supervised_only, sdae_pretrain };
enum class LrDecay { none, linear };

std::string to_string(TrainMode mode);
std::string to_string(LrDecay decay);

struct TrainConfig {
  LadderSpec ladder;
  double learning_rate = 0.005;
  std::size_t batch_size = 100;
  std::size_t iterations = 15000;
  std::uint64_t seed = 1;
  AdamSettings adam;
  LrDecay lr_decay = LrDecay::none;
  double decay_fraction = 0.25;  // linear decay to zero over this final fraction
  TrainMode mode = TrainMode::ladder;
  double grad_clip = 0.0;        // global-norm clip; 0 disables
  std::size_t pretrain_iterations = 1000;  // per layer, sdae_pretrain mode
  std::size_t checkpoint_every = 0;        // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_path;
  std::size_t eval_batch = 1024;
  /// Class balancing of the labeled pool, applied only when every training label is used.
  BalanceStrategy balance = BalanceStrategy::upsample;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossPoint {
  double c_super = 0.0;
  double c_recon = 0.0;
  double c_total = 0.0;

  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct TrainReport {
  std::vector<LossPoint> curve;
  Metrics metrics;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::string config_echo;
};

/// Runs the optimization loop; supports checkpointing and resumption.
///
/// Every iteration draws batch_size labeled samples (with replacement, from
/// the labeled pool) followed by batch_size unlabeled samples (with
/// replacement, from the unlabeled pool). C_Super uses the corrupted pass on
/// the labeled half; C_Recon uses the whole batch.
class Trainer {
 public:
  Trainer(TrainConfig config, const PatchSet& data, const SemiSplit& split);

  /// Runs until `iterations` total iterations have completed.
  void run(std::size_t iterations);
  void run() { run(config_.iterations); }

  /// One optimization step on C_Total; returns the losses.
  LossPoint step();

  std::size_t iteration() const noexcept { return iteration_; }
  const std::vector<LossPoint>& curve() const noexcept { return curve_; }
  LadderParams& params() noexcept { return params_; }
  const LadderParams& params() const noexcept { return params_; }
  const TrainConfig& config() const noexcept { return config_; }

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);

 private:
  void pretrain_layers();
  double current_learning_rate() const;

  TrainConfig config_;
  const PatchSet& data_;
  std::vector<std::size_t> labeled_pool_;
  std::vector<std::size_t> unlabeled_pool_;
  LadderParams params_;
  Adam adam_;
  Rng rng_;
  std::size_t iteration_ = 0;
  bool pretrained_ = false;
  std::vector<LossPoint> curve_;
};

struct TrainResult {
  LadderParams params;
  TrainReport report;
  Checkpoint final_state;  // resumable state after the last iteration
};

/// Trains from scratch and evaluates on split.test.
TrainResult train(const TrainConfig& config, const PatchSet& data, const SemiSplit& split);

/// Clean-encoder metrics on the given sample indices.
Metrics evaluate(LadderParams& params, const LadderSpec& spec, const PatchSet& data, std::span<const std::size_t> indices,
                 std::size_t batch = 1024);

/// Key-value text report ("key = value" lines).
std::string format_report(const TrainReport& report);
/// CSV "iteration,c_super,c_recon,c_total".
std::string format_loss_curve(const TrainReport& report);

}  // namespace ladder
