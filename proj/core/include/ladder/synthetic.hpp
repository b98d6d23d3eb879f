#pragma once

#include <cstdint>

#include "ladder/hsi.hpp"

namespace ladder {

/// Parameters of the synthetic benchmark scene.
///
/// The scene is tiled with square blocks, each assigned one class. A class
/// spectrum is a Gaussian bump over the band axis on a flat baseline. Every
/// pixel is its class spectrum scaled by a random brightness gain, plus
/// smooth per-pixel spectral distortion and i.i.d. sensor noise.
struct SyntheticSpec {
  std::size_t height = 48;
  std::size_t width = 48;
  std::size_t bands = 8;
  int classes = 3;
  std::size_t block = 8;
  double bump_height = 0.25;   // class signal amplitude
  double bump_width = 1.5;     // in bands
  double gain_std = 0.35;      // std of the log brightness gain
  double distortion_std = 0.08;
  double sensor_noise = 0.05;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

HsiCube make_synthetic_cube(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace ladder
