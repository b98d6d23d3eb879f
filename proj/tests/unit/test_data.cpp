#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "ladder/array_file.hpp"
#include "ladder/error.hpp"
#include "ladder/hsi.hpp"
#include "ladder/pca.hpp"
#include "ladder/split.hpp"
#include "ladder/synthetic.hpp"
#include "oracles.hpp"

namespace ladder {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ladder_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Hand-assembled HSICUBE1 bytes for a [2,1] f32 array.
TEST(ArrayFile, ByteLayoutIsExact) {
  NdArray a{{2, 1}, DType::f32, {1.5, -2.0}};
  std::string expected = "HSICUBE1";
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) expected += static_cast<char>((v >> (8 * i)) & 0xff);
  };
  put_u32(2);
  put_u32(2);
  put_u32(1);
  expected += static_cast<char>(1);
  for (float f : {1.5f, -2.0f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(bits);
  }
  EXPECT_EQ(encode_array(a), expected);
  EXPECT_EQ(decode_array(expected), a);
}

TEST(ArrayFile, RoundTripsEveryDtype) {
  Rng rng(1);
  for (DType t : {DType::f32, DType::f64, DType::u8}) {
    NdArray a{{3, 4, 2}, t, {}};
    for (int i = 0; i < 24; ++i) {
      a.values.push_back(t == DType::u8 ? static_cast<double>(rng.uniform_index(256))
                                        : t == DType::f32 ? static_cast<double>(static_cast<float>(rng.normal()))
                                                          : rng.normal());
    }
    EXPECT_EQ(decode_array(encode_array(a)), a) << to_string(t);
  }
}

TEST(ArrayFile, RejectsCorruptInput) {
  const std::string good = encode_array(NdArray{{2}, DType::f64, {1.0, 2.0}});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_array(bad_magic), IoError);
  EXPECT_THROW(decode_array(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_array(good + "x"), IoError);
  std::string bad_dtype = good;
  bad_dtype[8 + 4 + 4] = 9;
  EXPECT_THROW(decode_array(bad_dtype), IoError);
  EXPECT_THROW(encode_array(NdArray{{1}, DType::u8, {300.0}}), DataError);
}

TEST(ArrayFile, FailedWriteLeavesNoFile) {
  const auto dir = temp_dir("atomic");
  const auto target = dir / "missing" / "x.cube";
  EXPECT_THROW(write_array(target, NdArray{{1}, DType::f64, {1.0}}), IoError);
  EXPECT_FALSE(fs::exists(target));
  write_array(dir / "ok.cube", NdArray{{1}, DType::f64, {1.0}});
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "ok.cube");
}

HsiCube tiny_cube() {
  HsiCube c;
  c.height = 4;
  c.width = 5;
  c.bands = 3;
  c.num_classes = 2;
  for (std::size_t i = 0; i < c.height * c.width * c.bands; ++i) c.reflectance.push_back(static_cast<double>(i) * 0.5);
  c.ground_truth = {0, 1, 1, 2, 0, 1, 1, 2, 2, 0, 0, 1, 2, 2, 1, 1, 0, 2, 1, 0};
  return c;
}

TEST(Hsi, SaveLoadRoundTrip) {
  const auto dir = temp_dir("cube");
  const HsiCube c = tiny_cube();
  save_cube(c, dir / "d.cube", dir / "g.cube");
  const HsiCube back = load_cube(dir / "d.cube", dir / "g.cube");
  EXPECT_EQ(back.reflectance, c.reflectance);
  EXPECT_EQ(back.ground_truth, c.ground_truth);
  EXPECT_EQ(back.num_classes, 2);
  EXPECT_EQ(back.labeled_count(), 14u);
  EXPECT_THROW(load_cube(dir / "d.cube", dir / "g.cube", 1), DataError);
  EXPECT_THROW(load_cube(dir / "g.cube", dir / "g.cube"), DataError);
}

TEST(Hsi, MinMaxScalerUsesFitPixelsOnly) {
  HsiCube c = tiny_cube();
  const std::vector<std::size_t> fit{0, 1, 2};
  const auto s = fit_band_scaler(c, fit, ScalingKind::minmax);
  apply_band_scaler(c, s);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_DOUBLE_EQ(c.at(0, 0, b), 0.0);
    EXPECT_DOUBLE_EQ(c.at(0, 2, b), 1.0);
    EXPECT_DOUBLE_EQ(c.at(3, 4, b), 1.5);  // far outside the fitted range: clipped
  }
}

TEST(Hsi, ZScoreScalerStandardizesFitPixels) {
  HsiCube c = make_synthetic_cube(SyntheticSpec{}, 3);
  std::vector<std::size_t> fit(c.height * c.width);
  std::iota(fit.begin(), fit.end(), 0);
  apply_band_scaler(c, fit_band_scaler(c, fit, ScalingKind::zscore));
  for (std::size_t b = 0; b < c.bands; ++b) {
    double m = 0.0, v = 0.0;
    for (auto p : fit) m += c.reflectance[p * c.bands + b];
    m /= static_cast<double>(fit.size());
    for (auto p : fit) v += std::pow(c.reflectance[p * c.bands + b] - m, 2);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / static_cast<double>(fit.size()), 1.0, 1e-12);
  }
}

TEST(Hsi, MirrorIndexReflectsWithoutRepeatingEdge) {
  EXPECT_EQ(mirror_index(-1, 5), 1u);
  EXPECT_EQ(mirror_index(-2, 5), 2u);
  EXPECT_EQ(mirror_index(5, 5), 3u);
  EXPECT_EQ(mirror_index(6, 5), 2u);
  EXPECT_EQ(mirror_index(3, 1), 0u);
  for (std::ptrdiff_t i = -40; i < 40; ++i)
    for (std::size_t n = 1; n < 7; ++n) ASSERT_LT(mirror_index(i, n), n);
}

TEST(Hsi, PatchesMatchDirectLookup) {
  const HsiCube c = tiny_cube();
  const PatchSet p = extract_patches(c, 3);
  ASSERT_EQ(p.size(), c.labeled_count());
  EXPECT_EQ(p.sample_shape(), (Shape{3, 3, 3}));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& ctr = p.centers[i];
    EXPECT_EQ(p.labels[i], c.label(ctr.row, ctr.col) - 1);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        for (std::size_t b = 0; b < 3; ++b) {
          const auto r = mirror_index(static_cast<std::ptrdiff_t>(ctr.row) + dy, c.height);
          const auto col = mirror_index(static_cast<std::ptrdiff_t>(ctr.col) + dx, c.width);
          const std::size_t at = (((i * 3) + static_cast<std::size_t>(dy + 1)) * 3 + static_cast<std::size_t>(dx + 1)) * 3 + b;
          ASSERT_EQ(p.patches[at], c.at(r, col, b));
        }
  }
  EXPECT_THROW(extract_patches(c, 4), ConfigError);
  const PatchSet single = extract_patches(c, 1, true);
  EXPECT_EQ(single.patches.shape(), (Shape{20, 3}));
  EXPECT_EQ(single.labels[0], -1);
}

TEST(Pca, OrthonormalComponentsAndOrderedVariance) {
  Rng rng(4);
  Tensor x({200, 5});
  for (std::size_t i = 0; i < 200; ++i) {
    const double a = 3.0 * rng.normal(), b = rng.normal();
    for (std::size_t j = 0; j < 5; ++j) x(i, j) = a * (j + 1) * 0.3 + b * (j % 2 ? 1 : -1) + 0.1 * rng.normal();
  }
  const PcaModel m = pca_fit(x, 3);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 5; ++j) dot += m.components(j, p) * m.components(j, q);
      EXPECT_NEAR(dot, p == q ? 1.0 : 0.0, 1e-10);
    }
  EXPECT_GE(m.explained_variance[0], m.explained_variance[1]);
  EXPECT_GE(m.explained_variance[1], m.explained_variance[2]);
  // Variance of the first score equals the first eigenvalue.
  const Tensor s = pca_transform(m, x);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < 200; ++i) mean += s(i, 0);
  mean /= 200.0;
  for (std::size_t i = 0; i < 200; ++i) var += std::pow(s(i, 0) - mean, 2);
  EXPECT_NEAR(var / 199.0, m.explained_variance[0], 1e-9);
  // Sign convention: largest-magnitude loading is positive.
  for (std::size_t p = 0; p < 3; ++p) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 5; ++j)
      if (std::abs(m.components(j, p)) > std::abs(m.components(arg, p))) arg = j;
    EXPECT_GT(m.components(arg, p), 0.0);
  }
}

TEST(Pca, KnownTwoDimensionalCase) {
  // Points on the line y = x: all variance along (1,1)/sqrt2.
  Tensor x({4, 2}, {-3, -3, -1, -1, 1, 1, 3, 3});
  const PcaModel m = pca_fit(x, 2);
  EXPECT_NEAR(m.explained_variance[0], 40.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.explained_variance[1], 0.0, 1e-12);
  EXPECT_NEAR(m.components(0, 0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(m.components(1, 0), std::sqrt(0.5), 1e-12);
}

TEST(Pca, FullRankInverseReconstructs) {
  Rng rng(5);
  const Tensor x = oracle::random_tensor({30, 4}, rng);
  const PcaModel m = pca_fit(x, 4);
  EXPECT_LE(max_abs_diff(pca_inverse(m, pca_transform(m, x)), x), 1e-12);
  EXPECT_THROW(pca_fit(x, 5), ConfigError);
}

TEST(Pca, CubeTransformChangesBandCount) {
  const HsiCube c = make_synthetic_cube(SyntheticSpec{}, 1);
  std::vector<std::size_t> fit(c.height * c.width);
  std::iota(fit.begin(), fit.end(), 0);
  const PcaModel m = pca_fit(pixel_spectra(c, fit), 3);
  const HsiCube t = pca_transform_cube(m, c);
  EXPECT_EQ(t.bands, 3u);
  EXPECT_EQ(t.ground_truth, c.ground_truth);
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int classes, double background) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = rng.uniform() < background ? -1 : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(classes)));
  return labels;
}

// Property test over random label layouts and seeds.
TEST(Split, InvariantsHoldForRandomInputs) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int classes = 2 + static_cast<int>(rng.uniform_index(5));
    const auto labels = random_labels(rng, 200 + rng.uniform_index(300), classes, 0.2);
    const int per_class = static_cast<int>(rng.uniform_index(6));
    const auto s = make_split(labels, classes, per_class, 0.25, rng.next_u64());
    ASSERT_NO_THROW(check_split(s, labels));
    std::map<int, std::size_t> labeled, totals, tests;
    for (auto i : s.labeled_train) ++labeled[labels[i]];
    for (auto i : s.test) ++tests[labels[i]];
    std::size_t total = 0;
    for (int l : labels)
      if (l >= 0) ++totals[l], ++total;
    for (int k = 0; k < classes; ++k) {
      EXPECT_EQ(labeled[k], static_cast<std::size_t>(per_class));
      EXPECT_LE(std::abs(static_cast<double>(tests[k]) - 0.25 * static_cast<double>(totals[k])), 1.0);
    }
    EXPECT_EQ(s.test.size(), static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(total))));
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < 0) EXPECT_TRUE(std::binary_search(s.unlabeled_train.begin(), s.unlabeled_train.end(), i));
  }
}

TEST(Split, DeterministicAndTestSetIndependentOfLabelCount) {
  Rng rng(8);
  const auto labels = random_labels(rng, 400, 4, 0.1);
  const auto a = make_split(labels, 4, 5, 0.25, 11);
  EXPECT_EQ(a, make_split(labels, 4, 5, 0.25, 11));
  EXPECT_EQ(a.test, make_split(labels, 4, 10, 0.25, 11).test);
  EXPECT_EQ(a.test, make_split(labels, 4, kAllLabels, 0.25, 11).test);
  EXPECT_NE(a.test, make_split(labels, 4, 5, 0.25, 12).test);
}

TEST(Split, AllLabelsUsesEveryNonTestLabel) {
  Rng rng(9);
  const auto labels = random_labels(rng, 300, 3, 0.3);
  const auto s = make_split(labels, 3, kAllLabels, 0.25, 1);
  for (auto i : s.unlabeled_train) EXPECT_EQ(labels[i], -1);
  check_split(s, labels);
}

TEST(Split, TooSmallClassNamesTheClass) {
  std::vector<int> labels(40, 0);
  labels[0] = labels[1] = labels[2] = 1;
  try {
    (void)make_split(labels, 2, 5, 0.25, 1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos) << e.what();
  }
}

TEST(Split, CheckSplitCatchesOverlap) {
  const std::vector<int> labels{0, 1, 0, 1};
  SemiSplit s;
  s.labeled_train = {0, 1};
  s.test = {1, 2, 3};
  EXPECT_THROW(check_split(s, labels), DataError);
  s.test = {2};
  EXPECT_THROW(check_split(s, labels), DataError);
}

TEST(Split, BalanceEqualizesClassCounts) {
  const std::vector<int> labels{0, 0, 0, 0, 1, 2, 2};
  const std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6};
  Rng rng(1);
  for (auto strat : {BalanceStrategy::upsample, BalanceStrategy::downsample}) {
    const auto out = balance_labels(idx, labels, strat, rng);
    std::map<int, std::size_t> counts;
    for (auto i : out) ++counts[labels[i]];
    const std::size_t want = strat == BalanceStrategy::upsample ? 4 : 1;
    for (auto& [k, n] : counts) EXPECT_EQ(n, want) << k;
  }
  EXPECT_EQ(balance_labels(idx, labels, BalanceStrategy::none, rng), idx);
}

TEST(Split, CsvHasHeaderAndOneBasedClasses) {
  const auto dir = temp_dir("splitcsv");
  const std::vector<PixelRef> centers{{0, 0, 0}, {0, 1, 1}, {1, 0, -1}};
  SemiSplit s;
  s.labeled_train = {0};
  s.unlabeled_train = {2};
  s.test = {1};
  write_split_csv(dir / "s.csv", s, centers);
  EXPECT_EQ(read_file_bytes(dir / "s.csv"), "index,row,col,class,role\n0,0,0,1,labeled\n1,0,1,2,test\n2,1,0,0,unlabeled\n");
}

TEST(Synthetic, ShapeClassesAndDeterminism) {
  const SyntheticSpec spec;
  const HsiCube a = make_synthetic_cube(spec, 5);
  EXPECT_EQ(a.height, 48u);
  EXPECT_EQ(a.width, 48u);
  EXPECT_EQ(a.bands, 8u);
  EXPECT_EQ(a.num_classes, 3);
  ASSERT_NO_THROW(a.validate());
  const HsiCube b = make_synthetic_cube(spec, 5);
  EXPECT_EQ(a.reflectance, b.reflectance);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_NE(a.reflectance, make_synthetic_cube(spec, 6).reflectance);
  std::set<int> present(a.ground_truth.begin(), a.ground_truth.end());
  EXPECT_EQ(present, (std::set<int>{1, 2, 3}));
  // Labels are constant within every block.
  for (std::size_t r = 0; r < 48; ++r)
    for (std::size_t c = 0; c < 48; ++c) ASSERT_EQ(a.label(r, c), a.label(r / 8 * 8, c / 8 * 8));
}

}  // namespace
}  // namespace ladder
