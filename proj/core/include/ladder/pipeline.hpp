#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/hsi.hpp"
#include "ladder/pca.hpp"
#include "ladder/split.hpp"
#include "ladder/train.hpp"

namespace ladder {

/// Model-ready samples for one run.
struct PreparedData {
  PatchSet patches;
  SemiSplit split;
  BandScaler scaler;
  std::optional<PcaModel> pca;
  /// Flat pixel indices the scaler and PCA were fitted on (never test pixels).
  std::vector<std::size_t> fit_pixels;
};

/// Loads the configured cube (file or synthetic). Values are unscaled.
HsiCube load_dataset(const DatasetConfig& config);

/// Split, then scaling and PCA fitted on training pixels only, then patch
/// extraction. The sample order follows sample_pixels(); split indices refer
/// to it.
PreparedData prepare_data(const HsiCube& raw, const DatasetConfig& config, std::uint64_t split_seed);

/// Outcome of one configured training run.
struct RunResult {
  TrainResult trained;
  PreparedData data;
};

/// Loads/prepares data (unless `cube` is given) and trains with config.train.
RunResult run_experiment(const ExperimentConfig& config, const HsiCube* cube = nullptr);

}  // namespace ladder
