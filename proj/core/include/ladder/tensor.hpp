#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ladder {

using Shape = std::vector<std::size_t>;

/// Number of elements described by a shape; the empty shape is a scalar.
std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Row-major element access for rank-2 tensors.
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

  double item() const;

  /// Same data, new shape; the element count must not change.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(double value) noexcept;
  bool all_finite() const noexcept;

  /// Elements [begin, end) along the leading axis.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Gathers rows (leading-axis slices) of `source` at `indices`.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ladder
