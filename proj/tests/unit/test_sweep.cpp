#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ladder/array_file.hpp"
#include "ladder/config.hpp"
#include "ladder/error.hpp"
#include "ladder/pipeline.hpp"
#include "ladder/sweep.hpp"

namespace ladder {
namespace {

namespace fs = std::filesystem;

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.dataset.kind = DatasetKind::synthetic;
  c.dataset.synthetic.height = 16;
  c.dataset.synthetic.width = 16;
  c.dataset.synthetic.bands = 4;
  c.dataset.synthetic.block = 4;
  c.dataset.scaling = ScalingKind::zscore;
  c.dataset.labels_per_class = 3;
  c.train.ladder.layers = {{LayerKind::dense, 5, Activation::relu}, {LayerKind::softmax_head, 3, Activation::none}};
  c.train.ladder.lambdas = {1.0, 0.1, 0.2};
  c.train.batch_size = 8;
  c.train.iterations = 5;
  c.train.eval_batch = 64;
  return c;
}

SweepSpec tiny_sweep(SweepAxis axis, std::vector<double> values) {
  SweepSpec s;
  s.base = tiny_experiment();
  s.axis = axis;
  s.values = std::move(values);
  s.seeds = {1, 2};
  return s;
}

fs::path fresh(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ladder_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(SweepProtocol, NoiseAxisPinsLambdaAtEveryLevel) {
  const auto s = tiny_sweep(SweepAxis::noise_std, {0.0, 0.5});
  const auto c = cell_config(s, 0.5, 3);
  EXPECT_EQ(c.train.ladder.noise_std, 0.5);
  EXPECT_EQ(c.train.seed, 3u);
  for (double l : c.train.ladder.lambdas) EXPECT_EQ(l, kNoiseSweepLambda);
}

TEST(SweepProtocol, TopLambdaAxisPinsNoise) {
  auto s = tiny_sweep(SweepAxis::top_lambda, {0.42});
  auto c = cell_config(s, 0.42, 1);
  EXPECT_EQ(c.train.ladder.noise_std, kLambdaSweepNoise);
  EXPECT_EQ(c.train.ladder.lambdas, (std::vector<double>{0.0, 0.0, 0.42}));
  s.uniform_lambda = true;
  c = cell_config(s, 0.42, 1);
  EXPECT_EQ(c.train.ladder.lambdas, (std::vector<double>{0.42, 0.42, 0.42}));
}

TEST(SweepProtocol, IntegerAxesRejectFractions) {
  const auto s = tiny_sweep(SweepAxis::labels_per_class, {2.5});
  EXPECT_THROW(cell_config(s, 2.5, 1), ConfigError);
  EXPECT_EQ(cell_config(s, 4, 1).dataset.labels_per_class, 4);
  EXPECT_THROW(parse_sweep_axis("learning_rate"), ConfigError);
}

TEST(Sweep, OneRowPerCellAndExactAggregates) {
  const auto dir = fresh("sweep_rows");
  const auto s = tiny_sweep(SweepAxis::labels_per_class, {2, 3});
  SweepOptions opts;
  opts.csv_path = dir / "sweep.csv";
  const auto rows = run_sweep(s, opts);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_EQ(r.status, "ok");
  const auto agg = aggregate_sweep(rows);
  ASSERT_EQ(agg.size(), 2u);
  for (const auto& a : agg) {
    std::vector<double> oa;
    for (const auto& r : rows)
      if (r.value == a.value) oa.push_back(r.oa);
    const double m = (oa[0] + oa[1]) / 2.0;
    EXPECT_EQ(a.runs, 2u);
    EXPECT_EQ(a.oa_mean, m);
    EXPECT_EQ(a.oa_std, std::sqrt(((oa[0] - m) * (oa[0] - m) + (oa[1] - m) * (oa[1] - m)) / 1.0));
  }
  const auto back = read_sweep_csv(opts.csv_path, s.axis);
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i].oa, rows[i].oa);
    EXPECT_EQ(back[i].value, rows[i].value);
    EXPECT_EQ(back[i].seed, rows[i].seed);
  }
  EXPECT_EQ(read_file_bytes(opts.csv_path).substr(0, std::string(kSweepCsvHeader).size()), kSweepCsvHeader);
}

std::string strip_seconds(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

TEST(Sweep, DeterministicModuloWallClockAndParallelSafe) {
  const auto dir = fresh("sweep_det");
  const auto s = tiny_sweep(SweepAxis::noise_std, {0.0, 0.3});
  SweepOptions a, b;
  a.csv_path = dir / "a.csv";
  b.csv_path = dir / "b.csv";
  b.workers = 3;
  run_sweep(s, a);
  run_sweep(s, b);
  EXPECT_EQ(strip_seconds(read_file_bytes(a.csv_path)), strip_seconds(read_file_bytes(b.csv_path)));
}

TEST(Sweep, ResumeRunsOnlyMissingCells) {
  const auto dir = fresh("sweep_resume");
  const auto s = tiny_sweep(SweepAxis::labels_per_class, {2, 3});
  SweepOptions opts;
  opts.csv_path = dir / "sweep.csv";
  const auto full = run_sweep(s, opts);

  // Simulate an interruption: keep the header, two rows and a torn line.
  std::istringstream in(read_file_bytes(opts.csv_path));
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  write_file_atomic(opts.csv_path, header + "\n" + r1 + "\n" + r2 + "\nlabels_per_class,3,2,o");

  std::size_t executed = 0;
  opts.on_row = [&](const SweepRow&) { ++executed; };
  const auto resumed = run_sweep(s, opts);
  EXPECT_EQ(executed, 2u);
  ASSERT_EQ(resumed.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(resumed[i].oa, full[i].oa);
}

TEST(Sweep, FailedRunIsRecordedAndSweepContinues) {
  auto s = tiny_sweep(SweepAxis::labels_per_class, {3, 500});  // 500 labels per class cannot be drawn
  SweepOptions opts;
  const auto rows = run_sweep(s, opts);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[2].status.rfind("failed", 0), 0u);
  EXPECT_TRUE(std::isnan(rows[2].oa));
  const auto agg = aggregate_sweep(rows);
  ASSERT_EQ(agg.size(), 1u);
}

TEST(Sweep, FromConfigValidatesAxisAndValues) {
  ExperimentConfig c = tiny_experiment();
  EXPECT_THROW(sweep_from_config(c), ConfigError);
  c.sweep.axis = "noise_std";
  EXPECT_THROW(sweep_from_config(c), ConfigError);
  c.sweep.values = {0.0, 0.5};
  const auto s = sweep_from_config(c);
  EXPECT_EQ(s.axis, SweepAxis::noise_std);
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
}

TEST(RepeatedSeedTable, ReferenceRowsAndFormatting) {
  Table1Row r;
  r.variant = "fc";
  r.labels_per_class = 10;
  r.oa = {77.0, 78.0};
  r.oa_mean = 77.5;
  r.oa_std = std::sqrt(0.5);
  r.reference_mean = 77.4;
  r.reference_std = 1.0;
  const std::vector<Table1Row> rows{r};
  const std::string t = format_table1(rows);
  EXPECT_NE(t.find("fc,10,2,77.5,"), std::string::npos);
  bool found = false;
  for (const auto& ref : kTable1Reference)
    if (std::string(ref.variant) == "conv" && ref.labels_per_class == 5) found = ref.oa_mean == 88.92 && ref.oa_std == 2.97;
  EXPECT_TRUE(found);
}

TEST(RepeatedSeedTable, RunsRepeatedSeedsOnSmallData) {
  const auto c = tiny_experiment();
  const HsiCube cube = load_dataset(c.dataset);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto row = table1_row(c, "fc", 3, seeds, 1, &cube);
  EXPECT_EQ(row.oa.size(), 3u);
  EXPECT_TRUE(std::isnan(row.reference_mean));
}

}  // namespace
}  // namespace ladder
