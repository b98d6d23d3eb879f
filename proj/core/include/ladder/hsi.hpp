#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ladder/array_file.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// Hyperspectral image: height x width x bands reflectance plus a label map
/// where 0 marks background and 1..num_classes are ground-truth classes.
struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<double> reflectance;  // row-major [height][width][bands]
  std::vector<int> ground_truth;    // row-major [height][width]
  int num_classes = 0;

  double at(std::size_t r, std::size_t c, std::size_t b) const { return reflectance[(r * width + c) * bands + b]; }
  int label(std::size_t r, std::size_t c) const { return ground_truth[r * width + c]; }
  std::size_t labeled_count() const;
  /// Throws DataError on inconsistent sizes, non-finite values or labels outside 0..num_classes.
  void validate() const;
};

/// Reads a reflectance cube ([h, w, bands], f32 or f64) and a label map
/// ([h, w], u8) in HSICUBE1 format. `num_classes` defaults to the largest
/// label present; when given, larger labels are an error. Values are
/// returned unscaled; see fit_band_scaler().
HsiCube load_cube(const std::filesystem::path& data_path, const std::filesystem::path& gt_path,
                  std::optional<int> num_classes = std::nullopt);

void save_cube(const HsiCube& cube, const std::filesystem::path& data_path, const std::filesystem::path& gt_path,
               DType data_dtype = DType::f64);

enum class ScalingKind { none, minmax, zscore };

/// Per-band affine map value -> (value - offset) * factor, then clipped.
struct BandScaler {
  ScalingKind kind = ScalingKind::none;
  std::vector<double> offset;
  std::vector<double> factor;
  double clip_lo = -std::numeric_limits<double>::infinity();
  double clip_hi = std::numeric_limits<double>::infinity();
};

/// Fits per-band scaling on the given pixels (flat indices row * width + col).
/// minmax maps each band's fitted range to [0, 1] and clips to [-0.5, 1.5].
BandScaler fit_band_scaler(const HsiCube& cube, std::span<const std::size_t> pixels, ScalingKind kind);
void apply_band_scaler(HsiCube& cube, const BandScaler& scaler);

/// Spectra of the given pixels as an [n, bands] tensor.
Tensor pixel_spectra(const HsiCube& cube, std::span<const std::size_t> pixels);

struct PixelRef {
  std::size_t row = 0;
  std::size_t col = 0;
  int label = -1;  // 0-based class, -1 for background

  friend bool operator==(const PixelRef&, const PixelRef&) = default;
};

/// Pixels in row-major order: every labeled pixel, plus background pixels when requested.
std::vector<PixelRef> sample_pixels(const HsiCube& cube, bool include_background = false);

/// Patches centered on pixels, mirror-padded at the borders.
struct PatchSet {
  Tensor patches;            // [n, bands] when window == 1, else [n, window, window, bands]
  std::vector<int> labels;   // 0-based class, -1 for background
  std::vector<PixelRef> centers;
  std::size_t window = 1;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;
};

/// Reflected index for mirror padding (..., 2, 1 | 0, 1, 2, ... | n-2, n-3, ...).
std::size_t mirror_index(std::ptrdiff_t i, std::size_t n);

PatchSet extract_patches(const HsiCube& cube, std::size_t window, bool include_background = false);
PatchSet extract_patches(const HsiCube& cube, std::size_t window, std::span<const PixelRef> centers);

}  // namespace ladder
