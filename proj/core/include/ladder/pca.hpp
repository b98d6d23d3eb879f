#pragma once

#include <cstddef>

#include "ladder/hsi.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// Principal components of a set of spectra.
struct PcaModel {
  Tensor mean;                // [c]
  Tensor components;          // [c, k], orthonormal columns, descending eigenvalue order
  Tensor explained_variance;  // [k], non-increasing

  std::size_t input_dim() const { return mean.size(); }
  std::size_t output_dim() const { return explained_variance.size(); }
};

/// Eigendecomposition of the (n-1)-normalized covariance of mean-centered
/// rows of `spectra` ([n, c]). Sign convention: the largest-magnitude entry
/// of every component is positive.
PcaModel pca_fit(const Tensor& spectra, std::size_t k);

/// [n, c] -> [n, k]
Tensor pca_transform(const PcaModel& model, const Tensor& spectra);
/// [n, k] -> [n, c]
Tensor pca_inverse(const PcaModel& model, const Tensor& scores);

/// Projects every pixel of the cube; the result has `k` bands.
HsiCube pca_transform_cube(const PcaModel& model, const HsiCube& cube);

}  // namespace ladder
