#include "ladder/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ladder/array_file.hpp"
#include "ladder/error.hpp"
#include "ladder/format.hpp"
#include "ladder/pipeline.hpp"

namespace ladder {
namespace {

double sample_std(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

SweepRow run_cell(const SweepSpec& spec, double value, std::uint64_t seed, const HsiCube* cube) {
  SweepRow row;
  row.value = value;
  row.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto result = run_experiment(cell_config(spec, value, seed), cube);
    const auto& report = result.trained.report;
    row.status = "ok";
    row.oa = report.metrics.overall_accuracy;
    row.aa = report.metrics.average_accuracy;
    if (!report.curve.empty()) {
      row.c_super = report.curve.back().c_super;
      row.c_recon = report.curve.back().c_recon;
    }
  } catch (const std::exception& e) {
    std::string reason = e.what();
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    row.status = "failed: " + reason;
    row.oa = row.aa = row.c_super = row.c_recon = std::nan("");
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

bool row_less(const SweepRow& a, const SweepRow& b) {
  return a.value != b.value ? a.value < b.value : a.seed < b.seed;
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::labels_per_class: return "labels_per_class";
    case SweepAxis::noise_std: return "noise_std";
    case SweepAxis::top_lambda: return "top_lambda";
    case SweepAxis::pca_components: return "pca_components";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (auto a : {SweepAxis::labels_per_class, SweepAxis::noise_std, SweepAxis::top_lambda, SweepAxis::pca_components}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("sweep.axis '" + name + "' is not one of labels_per_class, noise_std, top_lambda, pca_components");
}

SweepSpec sweep_from_config(const ExperimentConfig& config) {
  if (config.sweep.axis.empty()) throw ConfigError("sweep.axis is required for a sweep");
  if (config.sweep.values.empty()) throw ConfigError("sweep.values must not be empty");
  if (config.sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
  SweepSpec spec;
  spec.base = config;
  spec.axis = parse_sweep_axis(config.sweep.axis);
  spec.values = config.sweep.values;
  spec.seeds = config.sweep.seeds;
  spec.uniform_lambda = config.sweep.uniform_lambda;
  return spec;
}

ExperimentConfig cell_config(const SweepSpec& spec, double value, std::uint64_t seed) {
  ExperimentConfig c = spec.base;
  c.train.seed = seed;
  auto& lambdas = c.train.ladder.lambdas;
  auto integral = [&](const char* what) {
    if (value != std::floor(value)) throw ConfigError(std::string("sweep value for ") + what + " must be an integer");
    return value;
  };
  switch (spec.axis) {
    case SweepAxis::labels_per_class:
      c.dataset.labels_per_class = static_cast<int>(integral("labels_per_class"));
      break;
    case SweepAxis::noise_std:
      c.train.ladder.noise_std = value;
      std::fill(lambdas.begin(), lambdas.end(), kNoiseSweepLambda);
      break;
    case SweepAxis::top_lambda:
      c.train.ladder.noise_std = kLambdaSweepNoise;
      if (spec.uniform_lambda) {
        std::fill(lambdas.begin(), lambdas.end(), value);
      } else {
        std::fill(lambdas.begin(), lambdas.end(), 0.0);
        if (!lambdas.empty()) lambdas.back() = value;
      }
      break;
    case SweepAxis::pca_components:
      c.dataset.pca_components = static_cast<std::size_t>(integral("pca_components"));
      c.train.ladder.input_shape.clear();
      break;
  }
  c.validate();
  return c;
}

std::string sweep_row_csv(SweepAxis axis, const SweepRow& r) {
  std::ostringstream os;
  os << to_string(axis) << ',' << format_double(r.value) << ',' << r.seed << ',' << r.status << ','
     << format_double(r.oa) << ',' << format_double(r.aa) << ',' << format_double(r.c_super) << ','
     << format_double(r.c_recon) << ',' << format_double(r.seconds);
  return os.str();
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path, SweepAxis axis) {
  std::vector<SweepRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kSweepCsvHeader) throw DataError("unexpected sweep CSV header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) continue;  // torn final line from an interrupted run
    if (f[0] != to_string(axis)) throw DataError("sweep CSV " + path.string() + " belongs to axis " + f[0]);
    SweepRow r;
    try {
      r.value = std::stod(f[1]);
      r.seed = std::stoull(f[2]);
      r.status = f[3];
      r.oa = std::stod(f[4]);
      r.aa = std::stod(f[5]);
      r.c_super = std::stod(f[6]);
      r.c_recon = std::stod(f[7]);
      r.seconds = std::stod(f[8]);
    } catch (const std::exception&) {
      continue;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& options, const HsiCube* cube) {
  HsiCube loaded;
  if (cube == nullptr) {
    loaded = load_dataset(spec.base.dataset);
    cube = &loaded;
  }
  // Validate every cell before any training starts.
  for (double v : spec.values) (void)cell_config(spec, v, spec.seeds.front());

  std::vector<SweepRow> rows;
  std::set<std::pair<double, std::uint64_t>> done;
  if (options.resume && !options.csv_path.empty()) {
    for (auto& r : read_sweep_csv(options.csv_path, spec.axis)) {
      if (r.status != "ok") continue;
      if (done.insert({r.value, r.seed}).second) rows.push_back(r);
    }
  }

  std::vector<std::pair<double, std::uint64_t>> todo;
  for (double v : spec.values)
    for (auto s : spec.seeds)
      if (!done.count({v, s})) todo.emplace_back(v, s);

  std::mutex mu;
  std::ofstream csv;
  if (!options.csv_path.empty()) {
    if (!options.csv_path.parent_path().empty()) std::filesystem::create_directories(options.csv_path.parent_path());
    // Start a fresh file holding the reused rows, then append as cells finish.
    std::ostringstream head;
    head << kSweepCsvHeader << '\n';
    for (const auto& r : rows) head << sweep_row_csv(spec.axis, r) << '\n';
    write_file_atomic(options.csv_path, head.str());
    csv.open(options.csv_path, std::ios::app);
    if (!csv) throw IoError("cannot append to " + options.csv_path.string());
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      SweepRow row = run_cell(spec, todo[i].first, todo[i].second, cube);
      std::lock_guard lock(mu);
      if (csv.is_open()) {
        csv << sweep_row_csv(spec.axis, row) << '\n';
        csv.flush();
      }
      if (options.on_row) options.on_row(row);
      rows.push_back(std::move(row));
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, todo.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (csv.is_open()) csv.close();

  std::sort(rows.begin(), rows.end(), row_less);
  if (!options.csv_path.empty()) {
    std::ostringstream all;
    all << kSweepCsvHeader << '\n';
    for (const auto& r : rows) all << sweep_row_csv(spec.axis, r) << '\n';
    write_file_atomic(options.csv_path, all.str());
  }
  return rows;
}

std::vector<SweepAggregate> aggregate_sweep(std::span<const SweepRow> rows) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_value;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    by_value[r.value].first.push_back(r.oa);
    by_value[r.value].second.push_back(r.aa);
  }
  std::vector<SweepAggregate> out;
  for (const auto& [value, acc] : by_value) {
    SweepAggregate a;
    a.value = value;
    a.runs = acc.first.size();
    a.oa_mean = mean_of(acc.first);
    a.oa_std = sample_std(acc.first, a.oa_mean);
    a.aa_mean = mean_of(acc.second);
    a.aa_std = sample_std(acc.second, a.aa_mean);
    out.push_back(a);
  }
  return out;
}

void write_aggregate_csv(const std::filesystem::path& path, SweepAxis axis, std::span<const SweepAggregate> aggregates) {
  std::ostringstream os;
  os << "axis,value,runs,oa_mean,oa_std,aa_mean,aa_std\n";
  for (const auto& a : aggregates) {
    os << to_string(axis) << ',' << format_double(a.value) << ',' << a.runs << ',' << format_double(a.oa_mean) << ','
       << format_double(a.oa_std) << ',' << format_double(a.aa_mean) << ',' << format_double(a.aa_std) << '\n';
  }
  write_file_atomic(path, os.str());
}

Table1Row table1_row(const ExperimentConfig& config, const std::string& variant, int labels_per_class,
                     std::span<const std::uint64_t> seeds, std::size_t workers, const HsiCube* cube) {
  SweepSpec spec;
  spec.base = config;
  spec.axis = SweepAxis::labels_per_class;
  spec.values = {static_cast<double>(labels_per_class)};
  spec.seeds.assign(seeds.begin(), seeds.end());
  SweepOptions opts;
  opts.workers = workers;
  opts.resume = false;
  const auto rows = run_sweep(spec, opts, cube);

  Table1Row out;
  out.variant = variant;
  out.labels_per_class = labels_per_class;
  for (const auto& r : rows) {
    if (r.status != "ok") throw NumericError("table run with seed " + std::to_string(r.seed) + " " + r.status);
    out.oa.push_back(100.0 * r.oa);
  }
  out.oa_mean = mean_of(out.oa);
  out.oa_std = sample_std(out.oa, out.oa_mean);
  out.reference_mean = out.reference_std = std::nan("");
  for (const auto& ref : kTable1Reference) {
    if (variant == ref.variant && labels_per_class == ref.labels_per_class) {
      out.reference_mean = ref.oa_mean;
      out.reference_std = ref.oa_std;
    }
  }
  return out;
}

std::string format_table1(std::span<const Table1Row> rows) {
  std::ostringstream os;
  os << "variant,labels_per_class,runs,oa_mean,oa_std,reference_mean,reference_std\n";
  for (const auto& r : rows) {
    os << r.variant << ',' << r.labels_per_class << ',' << r.oa.size() << ',' << format_double(r.oa_mean) << ','
       << format_double(r.oa_std) << ',' << format_double(r.reference_mean) << ',' << format_double(r.reference_std)
       << '\n';
  }
  return os.str();
}

}  // namespace ladder
