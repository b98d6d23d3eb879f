#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/hsi.hpp"

namespace ladder {

enum class SweepAxis { labels_per_class, noise_std, top_lambda, pca_components };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

/// Pinned value of every lambda during a noise sweep.
inline constexpr double kNoiseSweepLambda = 0.1;
/// Pinned noise std during a top-lambda sweep.
inline constexpr double kLambdaSweepNoise = 0.5;

struct SweepSpec {
  ExperimentConfig base;
  SweepAxis axis = SweepAxis::noise_std;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool uniform_lambda = false;  // top_lambda axis: set every level instead of only the top
};

SweepSpec sweep_from_config(const ExperimentConfig& config);

/// Configuration of one sweep cell, with the axis protocol applied.
ExperimentConfig cell_config(const SweepSpec& spec, double value, std::uint64_t seed);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed: <reason>"
  double oa = 0.0;
  double aa = 0.0;
  double c_super = 0.0;  // final iteration
  double c_recon = 0.0;
  double seconds = 0.0;
};

struct SweepAggregate {
  double value = 0.0;
  std::size_t runs = 0;
  double oa_mean = 0.0;
  double oa_std = 0.0;  // sample standard deviation; 0 for a single run
  double aa_mean = 0.0;
  double aa_std = 0.0;
};

struct SweepOptions {
  std::filesystem::path csv_path;  // empty: no CSV
  std::size_t workers = 1;
  bool resume = true;
  std::function<void(const SweepRow&)> on_row;  // called under the writer lock
};

inline constexpr const char* kSweepCsvHeader = "axis,value,seed,status,oa,aa,c_super,c_recon,seconds";

/// Runs every (value, seed) cell. Completed cells found in an existing CSV
/// are reused. Rows are appended as cells finish and the file is rewritten
/// in (value, seed) order at the end.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& options, const HsiCube* cube = nullptr);

/// Per-value mean and sample std over rows with status "ok".
std::vector<SweepAggregate> aggregate_sweep(std::span<const SweepRow> rows);

std::string sweep_row_csv(SweepAxis axis, const SweepRow& row);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path, SweepAxis axis);
void write_aggregate_csv(const std::filesystem::path& path, SweepAxis axis, std::span<const SweepAggregate> aggregates);

/// Reference accuracies for the labeled-sample comparison table.
struct Table1Reference {
  const char* variant;  // "conv" or "fc"
  int labels_per_class;
  double oa_mean;
  double oa_std;
};
inline constexpr Table1Reference kTable1Reference[] = {
    {"conv", 5, 88.92, 2.97},
    {"conv", 10, 93.13, 2.03},
    {"fc", 5, 71.2, 1.5},
    {"fc", 10, 77.4, 1.0},
};

struct Table1Row {
  std::string variant;
  int labels_per_class = 0;
  std::vector<double> oa;  // percent, one per seed
  double oa_mean = 0.0;
  double oa_std = 0.0;
  double reference_mean = 0.0;
  double reference_std = 0.0;
};

/// Repeated runs of `config` at a fixed number of labels per class.
Table1Row table1_row(const ExperimentConfig& config, const std::string& variant, int labels_per_class,
                     std::span<const std::uint64_t> seeds, std::size_t workers = 1, const HsiCube* cube = nullptr);

std::string format_table1(std::span<const Table1Row> rows);

}  // namespace ladder
