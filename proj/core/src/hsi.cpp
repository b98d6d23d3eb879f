#include "ladder/hsi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladder/error.hpp"

namespace ladder {

std::size_t HsiCube::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(ground_truth.begin(), ground_truth.end(), [](int v) { return v > 0; }));
}

void HsiCube::validate() const {
  if (height == 0 || width == 0 || bands == 0) throw DataError("cube has an empty dimension");
  if (reflectance.size() != height * width * bands) throw DataError("reflectance size does not match height x width x bands");
  if (ground_truth.size() != height * width) throw DataError("ground truth size does not match height x width");
  for (double v : reflectance)
    if (!std::isfinite(v)) throw DataError("reflectance contains non-finite values");
  for (int v : ground_truth) {
    if (v < 0 || v > num_classes) {
      throw DataError("ground-truth label " + std::to_string(v) + " outside 0.." + std::to_string(num_classes));
    }
  }
}

HsiCube load_cube(const std::filesystem::path& data_path, const std::filesystem::path& gt_path,
                  std::optional<int> num_classes) {
  const NdArray data = read_array(data_path);
  const NdArray gt = read_array(gt_path);
  if (data.dtype == DType::u8) throw DataError("reflectance must be f32 or f64, got u8");
  if (gt.dtype != DType::u8) throw DataError("ground truth must be u8, got " + to_string(gt.dtype));
  if (data.shape.size() != 3) throw DataError("reflectance must be [height, width, bands], got " + to_string(data.shape));
  if (gt.shape.size() != 2) throw DataError("ground truth must be [height, width], got " + to_string(gt.shape));
  if (gt.shape[0] != data.shape[0] || gt.shape[1] != data.shape[1]) {
    throw DataError("ground truth " + to_string(gt.shape) + " does not match reflectance " + to_string(data.shape));
  }
  HsiCube cube;
  cube.height = data.shape[0];
  cube.width = data.shape[1];
  cube.bands = data.shape[2];
  cube.reflectance = data.values;
  cube.ground_truth.reserve(gt.values.size());
  int max_label = 0;
  for (double v : gt.values) {
    cube.ground_truth.push_back(static_cast<int>(v));
    max_label = std::max(max_label, static_cast<int>(v));
  }
  cube.num_classes = num_classes.value_or(max_label);
  cube.validate();
  return cube;
}

void save_cube(const HsiCube& cube, const std::filesystem::path& data_path, const std::filesystem::path& gt_path,
               DType data_dtype) {
  cube.validate();
  write_array(data_path, NdArray{{cube.height, cube.width, cube.bands}, data_dtype, cube.reflectance});
  std::vector<double> gt(cube.ground_truth.begin(), cube.ground_truth.end());
  write_array(gt_path, NdArray{{cube.height, cube.width}, DType::u8, std::move(gt)});
}

BandScaler fit_band_scaler(const HsiCube& cube, std::span<const std::size_t> pixels, ScalingKind kind) {
  BandScaler s;
  s.kind = kind;
  s.offset.assign(cube.bands, 0.0);
  s.factor.assign(cube.bands, 1.0);
  if (kind == ScalingKind::none) return s;
  if (pixels.empty()) throw PreconditionError("cannot fit band scaling on zero pixels");
  for (std::size_t b = 0; b < cube.bands; ++b) {
    if (kind == ScalingKind::minmax) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto p : pixels) {
        const double v = cube.reflectance[p * cube.bands + b];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      s.offset[b] = lo;
      s.factor[b] = hi > lo ? 1.0 / (hi - lo) : 1.0;
    } else {
      double m = 0.0;
      for (auto p : pixels) m += cube.reflectance[p * cube.bands + b];
      m /= static_cast<double>(pixels.size());
      double var = 0.0;
      for (auto p : pixels) {
        const double d = cube.reflectance[p * cube.bands + b] - m;
        var += d * d;
      }
      var /= static_cast<double>(pixels.size());
      s.offset[b] = m;
      s.factor[b] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    }
  }
  if (kind == ScalingKind::minmax) {
    s.clip_lo = -0.5;
    s.clip_hi = 1.5;
  }
  return s;
}

void apply_band_scaler(HsiCube& cube, const BandScaler& scaler) {
  if (scaler.kind == ScalingKind::none) return;
  if (scaler.offset.size() != cube.bands) throw DimensionError("band scaler fitted for a different band count");
  for (std::size_t p = 0; p < cube.height * cube.width; ++p) {
    for (std::size_t b = 0; b < cube.bands; ++b) {
      double& v = cube.reflectance[p * cube.bands + b];
      v = std::clamp((v - scaler.offset[b]) * scaler.factor[b], scaler.clip_lo, scaler.clip_hi);
    }
  }
}

Tensor pixel_spectra(const HsiCube& cube, std::span<const std::size_t> pixels) {
  Tensor out({pixels.size(), cube.bands});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] >= cube.height * cube.width) throw DimensionError("pixel index out of range");
    std::copy_n(cube.reflectance.begin() + static_cast<std::ptrdiff_t>(pixels[i] * cube.bands), cube.bands,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * cube.bands));
  }
  return out;
}

std::vector<PixelRef> sample_pixels(const HsiCube& cube, bool include_background) {
  std::vector<PixelRef> out;
  for (std::size_t r = 0; r < cube.height; ++r)
    for (std::size_t c = 0; c < cube.width; ++c) {
      const int l = cube.label(r, c);
      if (l > 0) out.push_back({r, c, l - 1});
      else if (include_background) out.push_back({r, c, -1});
    }
  return out;
}

Shape PatchSet::sample_shape() const {
  const Shape& s = patches.shape();
  return Shape(s.begin() + 1, s.end());
}

std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

PatchSet extract_patches(const HsiCube& cube, std::size_t window, bool include_background) {
  const auto centers = sample_pixels(cube, include_background);
  return extract_patches(cube, window, centers);
}

PatchSet extract_patches(const HsiCube& cube, std::size_t window, std::span<const PixelRef> centers) {
  if (window == 0 || window % 2 == 0) throw ConfigError("patch window must be odd and >= 1, got " + std::to_string(window));
  PatchSet set;
  set.window = window;
  set.num_classes = cube.num_classes;
  set.centers.assign(centers.begin(), centers.end());
  const std::size_t n = centers.size();
  const std::size_t bands = cube.bands;
  set.patches = window == 1 ? Tensor({n, bands}) : Tensor({n, window, window, bands});
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  auto out = set.patches.data();
  std::size_t k = 0;
  for (const auto& c : centers) {
    set.labels.push_back(c.label);
    for (std::ptrdiff_t dy = -half; dy <= half; ++dy) {
      const std::size_t r = mirror_index(static_cast<std::ptrdiff_t>(c.row) + dy, cube.height);
      for (std::ptrdiff_t dx = -half; dx <= half; ++dx) {
        const std::size_t col = mirror_index(static_cast<std::ptrdiff_t>(c.col) + dx, cube.width);
        const double* src = cube.reflectance.data() + (r * cube.width + col) * bands;
        std::copy_n(src, bands, out.begin() + static_cast<std::ptrdiff_t>(k));
        k += bands;
      }
    }
  }
  return set;
}

}  // namespace ladder
