#include <benchmark/benchmark.h>

#include "ladder/config.hpp"
#include "ladder/pipeline.hpp"
#include "ladder/train.hpp"

namespace {

using namespace ladder;

void ladder_steps(benchmark::State& state, const char* mode) {
  ExperimentConfig cfg = load_config("synthetic");
  cfg.train.mode = std::string(mode) == "ladder" ? TrainMode::ladder : TrainMode::supervised_only;
  const HsiCube cube = load_dataset(cfg.dataset);
  const PreparedData data = prepare_data(cube, cfg.dataset, 1);
  Trainer trainer(cfg.train, data.patches, data.split);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}

void BM_LadderStep(benchmark::State& state) { ladder_steps(state, "ladder"); }
void BM_SupervisedStep(benchmark::State& state) { ladder_steps(state, "supervised-only"); }
BENCHMARK(BM_LadderStep);
BENCHMARK(BM_SupervisedStep);

// One step of the FC architecture used on the 103-band scene.
void BM_FcPaviaShapedStep(benchmark::State& state) {
  ExperimentConfig cfg = load_config("fc_pavia");
  cfg.dataset.kind = DatasetKind::synthetic;
  cfg.dataset.synthetic.bands = 103;
  cfg.dataset.synthetic.classes = 9;
  cfg.dataset.synthetic.height = 60;
  cfg.dataset.synthetic.width = 60;
  cfg.dataset.synthetic.block = 5;
  const HsiCube cube = load_dataset(cfg.dataset);
  const PreparedData data = prepare_data(cube, cfg.dataset, 1);
  Trainer trainer(cfg.train, data.patches, data.split);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_FcPaviaShapedStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
