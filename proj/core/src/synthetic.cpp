#include "ladder/synthetic.hpp"

#include <cmath>

#include "ladder/error.hpp"
#include "ladder/rng.hpp"

namespace ladder {

HsiCube make_synthetic_cube(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.height == 0 || spec.width == 0 || spec.bands == 0 || spec.block == 0) {
    throw ConfigError("synthetic scene dimensions must be positive");
  }
  if (spec.classes < 2 || spec.classes > 255) throw ConfigError("synthetic scene needs 2..255 classes");
  Rng rng(seed);
  const auto k = static_cast<std::size_t>(spec.classes);

  std::vector<std::vector<double>> prototypes(k, std::vector<double>(spec.bands));
  for (std::size_t c = 0; c < k; ++c) {
    const double center = (static_cast<double>(c) + 0.5) * static_cast<double>(spec.bands) / static_cast<double>(k) - 0.5;
    for (std::size_t b = 0; b < spec.bands; ++b) {
      const double d = (static_cast<double>(b) - center) / spec.bump_width;
      prototypes[c][b] = 0.5 + spec.bump_height * std::exp(-0.5 * d * d);
    }
  }

  const std::size_t by = (spec.height + spec.block - 1) / spec.block;
  const std::size_t bx = (spec.width + spec.block - 1) / spec.block;
  std::vector<int> block_class(by * bx);
  for (std::size_t i = 0; i < block_class.size(); ++i) {
    // Cycle through classes so every class owns blocks, then shuffle.
    block_class[i] = static_cast<int>(i % k);
  }
  for (std::size_t i = block_class.size(); i > 1; --i) std::swap(block_class[i - 1], block_class[rng.uniform_index(i)]);

  HsiCube cube;
  cube.height = spec.height;
  cube.width = spec.width;
  cube.bands = spec.bands;
  cube.num_classes = spec.classes;
  cube.reflectance.resize(spec.height * spec.width * spec.bands);
  cube.ground_truth.resize(spec.height * spec.width);
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      const int cls = block_class[(r / spec.block) * bx + c / spec.block];
      cube.ground_truth[r * spec.width + c] = cls + 1;
      const double gain = std::exp(spec.gain_std * rng.normal());
      // Low-frequency distortion: random tilt and curvature across bands.
      const double tilt = spec.distortion_std * rng.normal();
      const double curve = spec.distortion_std * rng.normal();
      for (std::size_t b = 0; b < spec.bands; ++b) {
        const double t = spec.bands > 1 ? 2.0 * static_cast<double>(b) / static_cast<double>(spec.bands - 1) - 1.0 : 0.0;
        const double v = gain * prototypes[static_cast<std::size_t>(cls)][b] + tilt * t + curve * (t * t - 1.0 / 3.0) +
                         spec.sensor_noise * rng.normal();
        cube.reflectance[(r * spec.width + c) * spec.bands + b] = v;
      }
    }
  }
  return cube;
}

}  // namespace ladder
