#include "ladder/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ladder/error.hpp"

namespace ladder {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " needs " + std::to_string(numel(shape_)) +
                         " values, got " + std::to_string(data_.size()));
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), std::vector<double>(values)) {}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin > end || end > shape_[0]) {
    throw DimensionError("row slice [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         to_string(shape_));
  }
  const std::size_t row = shape_[0] ? data_.size() / shape_[0] : 0;
  Shape shape = shape_;
  shape[0] = end - begin;
  return Tensor(std::move(shape), std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * row),
                                                      data_.begin() + static_cast<std::ptrdiff_t>(end * row)));
}

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices) {
  if (source.rank() == 0) throw DimensionError("gather_rows on a scalar");
  const std::size_t rows = source.dim(0);
  const std::size_t row = rows ? source.size() / rows : 0;
  Shape shape = source.shape();
  shape[0] = indices.size();
  std::vector<double> out(indices.size() * row);
  auto src = source.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) throw DimensionError("gather index " + std::to_string(indices[i]) + " >= " + std::to_string(rows));
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * row), row,
                out.begin() + static_cast<std::ptrdiff_t>(i * row));
  }
  return Tensor(std::move(shape), std::move(out));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff shapes " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ladder
