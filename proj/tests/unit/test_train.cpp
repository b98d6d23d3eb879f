#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ladder/adam.hpp"
#include "ladder/checkpoint.hpp"
#include "ladder/error.hpp"
#include "ladder/metrics.hpp"
#include "ladder/pipeline.hpp"
#include "ladder/train.hpp"

namespace ladder {
namespace {

namespace fs = std::filesystem;

DatasetConfig small_dataset() {
  DatasetConfig d;
  d.kind = DatasetKind::synthetic;
  d.synthetic.height = 16;
  d.synthetic.width = 16;
  d.synthetic.bands = 4;
  d.synthetic.block = 4;
  d.scaling = ScalingKind::zscore;
  d.labels_per_class = 3;
  return d;
}

TrainConfig small_train(std::vector<double> lambdas = {1.0, 0.1, 0.1}) {
  TrainConfig t;
  t.ladder.layers = {{LayerKind::dense, 6, Activation::relu}, {LayerKind::softmax_head, 3, Activation::none}};
  t.ladder.lambdas = std::move(lambdas);
  t.batch_size = 8;
  t.iterations = 12;
  t.learning_rate = 0.01;
  t.eval_batch = 50;
  return t;
}

struct Fixture {
  HsiCube cube;
  PreparedData data;
  explicit Fixture(DatasetConfig d = small_dataset()) : cube(load_dataset(d)), data(prepare_data(cube, d, 1)) {}
};

TEST(Adam, MatchesHandComputedSteps) {
  Parameter p("w", Tensor({2}, {1.0, -2.0}));
  Adam adam;
  std::vector<Parameter*> ps{&p};
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m[2] = {0, 0}, v[2] = {0, 0}, w[2] = {1.0, -2.0};
  const double grads[2][2] = {{0.5, -1.0}, {0.25, 3.0}};
  for (int t = 1; t <= 2; ++t) {
    p.grad = Tensor({2}, {grads[t - 1][0], grads[t - 1][1]});
    adam.step(ps, lr);
    for (int j = 0; j < 2; ++j) {
      m[j] = b1 * m[j] + (1 - b1) * grads[t - 1][j];
      v[j] = b2 * v[j] + (1 - b2) * grads[t - 1][j] * grads[t - 1][j];
      w[j] -= lr * (m[j] / (1 - std::pow(b1, t))) / (std::sqrt(v[j] / (1 - std::pow(b2, t))) + eps);
      EXPECT_NEAR(p.value[static_cast<std::size_t>(j)], w[j], 1e-15);
    }
  }
  EXPECT_EQ(adam.steps(), 2);
}

TEST(Adam, NonFiniteGradientNamesParameterAndChangesNothing) {
  Parameter a("encoder.1.weight", Tensor({1}, {1.0}));
  Parameter b("decoder.1.weight", Tensor({1}, {2.0}));
  a.grad[0] = 1.0;
  b.grad[0] = std::nan("");
  Adam adam;
  std::vector<Parameter*> ps{&a, &b};
  try {
    adam.step(ps, 0.1);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.1.weight"), std::string::npos);
  }
  EXPECT_EQ(a.value[0], 1.0);
  EXPECT_EQ(adam.steps(), 0);
}

TEST(Adam, ClipGradNormRescales) {
  Parameter a("a", Tensor({2}, {0.0, 0.0}));
  a.grad = Tensor({2}, {3.0, 4.0});
  std::vector<Parameter*> ps{&a};
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(a.grad[1], 0.8, 1e-15);
}

TEST(Metrics, ConfusionOverallAndAverageAccuracy) {
  const std::vector<int> truth{0, 0, 0, 1, 1, 2};
  const std::vector<int> pred{0, 0, 1, 1, 0, 2};
  const Metrics m = compute_metrics(truth, pred, 4);
  EXPECT_DOUBLE_EQ(m.overall_accuracy, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.per_class_accuracy[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.per_class_accuracy[1], 0.5);
  EXPECT_TRUE(std::isnan(m.per_class_accuracy[3]));
  EXPECT_DOUBLE_EQ(m.average_accuracy, (2.0 / 3.0 + 0.5 + 1.0) / 3.0);
  EXPECT_EQ(m.confusion[0][1], 1u);
  EXPECT_EQ(m.confusion[1][0], 1u);
  EXPECT_EQ(m.total(), 6u);
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  Checkpoint c;
  c.iteration = 17;
  c.adam_steps = 17;
  c.rng_seed = 3;
  c.rng_state = Rng(3).state();
  c.tensors.emplace_back("a", Tensor({2, 2}, {1, 2, 3, 4}));
  c.tensors.emplace_back("b", Tensor::scalar(-0.5));
  const std::string bytes = encode_checkpoint(c);
  const Checkpoint d = decode_checkpoint(bytes);
  EXPECT_EQ(d.iteration, 17u);
  EXPECT_EQ(d.rng_state, c.rng_state);
  EXPECT_EQ(d.find("a"), c.find("a"));
  EXPECT_EQ(d.find("b"), c.find("b"));
  EXPECT_THROW(decode_checkpoint(bytes + "z"), IoError);
  EXPECT_THROW(decode_checkpoint("LADCKPT9" + bytes.substr(8)), IoError);
  EXPECT_THROW(d.find("missing"), IoError);
}

TEST(Trainer, DeterministicUnderSeed) {
  Fixture f;
  const auto a = train(small_train(), f.data.patches, f.data.split);
  const auto b = train(small_train(), f.data.patches, f.data.split);
  EXPECT_EQ(a.report.curve, b.report.curve);
  TrainConfig other = small_train();
  other.seed = 2;
  EXPECT_NE(train(other, f.data.patches, f.data.split).report.curve, a.report.curve);
}

// Collapse (b), training half: ladder mode with zero lambdas is supervised-only.
TEST(Trainer, ZeroLambdaLadderEqualsSupervisedOnlyStepForStep) {
  Fixture f;
  TrainConfig ladder_cfg = small_train({0.0, 0.0, 0.0});
  TrainConfig sup_cfg = small_train({1.0, 0.5, 0.1});
  sup_cfg.mode = TrainMode::supervised_only;
  Trainer a(ladder_cfg, f.data.patches, f.data.split);
  Trainer b(sup_cfg, f.data.patches, f.data.split);
  for (int i = 0; i < 10; ++i) {
    const LossPoint pa = a.step(), pb = b.step();
    ASSERT_EQ(pa, pb) << "iteration " << i;
    ASSERT_EQ(pa.c_total, pa.c_super);
    ASSERT_EQ(pa.c_recon, 0.0);
  }
  const auto pa = a.params().all();
  const auto pb = b.params().all();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(Trainer, ResumeFromCheckpointIsBitExact) {
  Fixture f;
  const auto dir = fs::temp_directory_path() / "ladder_test_resume";
  fs::create_directories(dir);
  TrainConfig cfg = small_train();
  cfg.iterations = 20;
  Trainer straight(cfg, f.data.patches, f.data.split);
  straight.run(20);

  Trainer first(cfg, f.data.patches, f.data.split);
  first.run(9);
  save_checkpoint(dir / "mid.ckpt", first.checkpoint());
  Trainer second(cfg, f.data.patches, f.data.split);
  second.restore(load_checkpoint(dir / "mid.ckpt"));
  EXPECT_EQ(second.iteration(), 9u);
  second.run(20);

  const auto a = straight.params().all();
  const auto b = second.params().all();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  EXPECT_EQ(std::vector<LossPoint>(straight.curve().begin() + 9, straight.curve().end()), second.curve());
  for (std::size_t l = 0; l < a.size() && l < straight.params().encoder.size(); ++l) {
    EXPECT_EQ(straight.params().encoder[l].running.mean, second.params().encoder[l].running.mean);
  }
}

TEST(Trainer, PeriodicCheckpointsAreWritten) {
  Fixture f;
  const auto path = fs::temp_directory_path() / "ladder_test_periodic.ckpt";
  fs::remove(path);
  TrainConfig cfg = small_train();
  cfg.checkpoint_every = 5;
  cfg.checkpoint_path = path;
  Trainer t(cfg, f.data.patches, f.data.split);
  t.run(12);
  ASSERT_TRUE(fs::exists(path));
  EXPECT_EQ(load_checkpoint(path).iteration, 10u);
}

TEST(Trainer, RejectsMismatchedHeadAndInput) {
  Fixture f;
  TrainConfig cfg = small_train();
  cfg.ladder.layers.back().width = 4;
  EXPECT_THROW(Trainer(cfg, f.data.patches, f.data.split), ConfigError);
  cfg = small_train();
  cfg.ladder.input_shape = {5};
  EXPECT_THROW(Trainer(cfg, f.data.patches, f.data.split), DimensionError);
}

TEST(Trainer, DivergenceRaisesNumericError) {
  Fixture f;
  TrainConfig cfg = small_train();
  cfg.learning_rate = 1e300;
  cfg.iterations = 50;
  Trainer t(cfg, f.data.patches, f.data.split);
  EXPECT_THROW(t.run(), NumericError);
}

TEST(Trainer, SdaePretrainModeTrains) {
  Fixture f;
  TrainConfig cfg = small_train();
  cfg.mode = TrainMode::sdae_pretrain;
  cfg.pretrain_iterations = 5;
  const auto r = train(cfg, f.data.patches, f.data.split);
  EXPECT_TRUE(r.params.all_finite());
  EXPECT_EQ(r.report.curve.size(), 12u);
}

TEST(Trainer, LossDecreasesOnSyntheticData) {
  Fixture f;
  TrainConfig cfg = small_train();
  cfg.iterations = 150;
  const auto r = train(cfg, f.data.patches, f.data.split);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 20; ++i) {
    early += r.report.curve[static_cast<std::size_t>(i)].c_super;
    late += r.report.curve[r.report.curve.size() - 1 - static_cast<std::size_t>(i)].c_super;
  }
  EXPECT_LT(late, early);
  EXPECT_GT(r.report.metrics.overall_accuracy, 1.0 / 3.0);
}

TEST(Trainer, TotalCostAtIteration200BelowFirstForEverySeed) {
  ExperimentConfig cfg = load_config("synthetic");
  const HsiCube cube = load_dataset(cfg.dataset);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PreparedData data = prepare_data(cube, cfg.dataset, seed);
    TrainConfig t = cfg.train;
    t.seed = seed;
    Trainer trainer(t, data.patches, data.split);
    trainer.run(200);
    EXPECT_LT(trainer.curve()[199].c_total, trainer.curve()[0].c_total) << "seed " << seed;
  }
}

TEST(Trainer, ReportAndCurveFormats) {
  Fixture f;
  auto r = train(small_train(), f.data.patches, f.data.split);
  const std::string text = format_report(r.report);
  EXPECT_NE(text.find("\noa = "), std::string::npos);
  EXPECT_NE(text.find("\naa = "), std::string::npos);
  const std::string csv = format_loss_curve(r.report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,c_super,c_recon,c_total");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 13u);
}

TEST(Pipeline, PreprocessingNeverSeesTestPixels) {
  DatasetConfig d = small_dataset();
  d.pca_components = 2;
  d.window = 3;
  const HsiCube cube = load_dataset(d);
  const PreparedData p = prepare_data(cube, d, 4);
  EXPECT_EQ(p.patches.sample_shape(), (Shape{3, 3, 2}));
  for (auto i : p.split.test) {
    const auto flat = p.patches.centers[i].row * cube.width + p.patches.centers[i].col;
    EXPECT_FALSE(std::binary_search(p.fit_pixels.begin(), p.fit_pixels.end(), flat));
  }
  EXPECT_EQ(p.fit_pixels.size() + p.split.test.size(), p.patches.size());
}

TEST(Pipeline, DatasetPreparationIsDeterministic) {
  DatasetConfig d = small_dataset();
  d.window = 3;
  const HsiCube cube = load_dataset(d);
  const PreparedData a = prepare_data(cube, d, 9), b = prepare_data(cube, d, 9);
  EXPECT_EQ(a.patches.patches, b.patches.patches);
  EXPECT_EQ(a.split, b.split);
}

}  // namespace
}  // namespace ladder
