#include "ladder/pipeline.hpp"

#include <algorithm>

#include "ladder/error.hpp"
#include "ladder/synthetic.hpp"

namespace ladder {

HsiCube load_dataset(const DatasetConfig& config) {
  if (config.kind == DatasetKind::synthetic) return make_synthetic_cube(config.synthetic, config.synthetic_seed);
  const auto data = resolve_dataset_path(config.data);
  const auto gt = resolve_dataset_path(config.gt);
  std::optional<int> classes;
  if (config.num_classes > 0) classes = config.num_classes;
  return load_cube(data, gt, classes);
}

PreparedData prepare_data(const HsiCube& raw, const DatasetConfig& config, std::uint64_t split_seed) {
  PreparedData out;
  const auto centers = sample_pixels(raw, config.include_background);
  std::vector<int> labels;
  labels.reserve(centers.size());
  for (const auto& p : centers) labels.push_back(p.label);
  out.split = make_split(labels, raw.num_classes, config.labels_per_class, config.test_fraction, split_seed);

  std::vector<char> is_test(centers.size(), 0);
  for (auto i : out.split.test) is_test[i] = 1;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!is_test[i]) out.fit_pixels.push_back(centers[i].row * raw.width + centers[i].col);
  }
  for (auto i : out.split.test) {
    const auto flat = centers[i].row * raw.width + centers[i].col;
    if (std::binary_search(out.fit_pixels.begin(), out.fit_pixels.end(), flat)) {
      throw DataError("test pixel leaked into the preprocessing fit set");
    }
  }

  HsiCube cube = raw;
  out.scaler = fit_band_scaler(cube, out.fit_pixels, config.scaling);
  apply_band_scaler(cube, out.scaler);
  if (config.pca_components > 0) {
    out.pca = pca_fit(pixel_spectra(cube, out.fit_pixels), config.pca_components);
    cube = pca_transform_cube(*out.pca, cube);
  }
  out.patches = extract_patches(cube, config.window, centers);
  return out;
}

RunResult run_experiment(const ExperimentConfig& config, const HsiCube* cube) {
  config.validate();
  HsiCube loaded;
  if (cube == nullptr) {
    loaded = load_dataset(config.dataset);
    cube = &loaded;
  }
  RunResult result{.trained = {}, .data = prepare_data(*cube, config.dataset, config.train.seed)};
  result.trained = train(config.train, result.data.patches, result.data.split);
  return result;
}

}  // namespace ladder
