#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ladder/hsi.hpp"
#include "ladder/synthetic.hpp"
#include "ladder/train.hpp"

namespace ladder {

enum class DatasetKind { hsicube, synthetic };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::hsicube;
  std::string data;   // HSICUBE1 reflectance file
  std::string gt;     // HSICUBE1 label map
  int num_classes = 0;  // 0 = largest label present
  std::size_t window = 1;
  std::size_t pca_components = 0;  // 0 = no PCA
  ScalingKind scaling = ScalingKind::minmax;
  bool include_background = false;
  double test_fraction = 0.25;
  int labels_per_class = 10;  // kAllLabels (-1) = every training label
  SyntheticSpec synthetic;
  std::uint64_t synthetic_seed = 7;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct SweepConfig {
  std::string axis;  // labels_per_class | noise_std | top_lambda | pca_components
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool uniform_lambda = false;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

/// Everything one experiment needs. The JSON form mirrors the struct:
/// top-level objects "dataset", "model", "train", "sweep" plus "name".
struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  TrainConfig train;
  SweepConfig sweep;
  std::string precision = "f64";

  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses JSON over the built-in defaults. Unknown keys, wrong types and
/// invalid values raise ConfigError naming the dotted key path.
/// `overrides` are "dotted.key=value" strings applied after the file; values
/// parse as JSON when possible, otherwise as strings.
ExperimentConfig parse_config(std::string_view json_text, std::span<const std::string> overrides = {});
/// `path` may also be a shipped config name; see resolve_config_path().
ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});
/// Fully resolved configuration as JSON; parse_config() of it is the identity.
std::string dump_config(const ExperimentConfig& config, int indent = 2);

/// Finds a config by path, or by name in LADDER_CONFIG_DIR and the shipped
/// configs directory ("fc_pavia" -> ".../configs/fc_pavia.json").
std::filesystem::path resolve_config_path(const std::string& name_or_path);

/// Resolves a dataset file, falling back to $LADDER_DATA_DIR. Throws
/// DatasetMissingError with conversion instructions when absent.
std::filesystem::path resolve_dataset_path(const std::string& path);

std::string to_string(ScalingKind kind);
std::string to_string(BalanceStrategy strategy);

}  // namespace ladder
