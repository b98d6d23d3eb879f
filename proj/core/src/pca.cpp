#include "ladder/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ladder/error.hpp"

namespace ladder {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Tensor& t) {
  return Eigen::Map<const RowMatrix>(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                                     static_cast<Eigen::Index>(t.dim(1)));
}

void check_matrix(const Tensor& t, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.dim(1) != cols) {
    throw DimensionError(std::string(what) + ": expected [n, " + std::to_string(cols) + "], got " + to_string(t.shape()));
  }
}

}  // namespace

PcaModel pca_fit(const Tensor& spectra, std::size_t k) {
  if (spectra.rank() != 2) throw DimensionError("pca_fit expects [n, c], got " + to_string(spectra.shape()));
  const std::size_t n = spectra.dim(0), c = spectra.dim(1);
  if (k == 0 || k > c) throw ConfigError("PCA components must be in 1.." + std::to_string(c) + ", got " + std::to_string(k));
  if (n < 2) throw PreconditionError("pca_fit needs at least 2 samples");

  const auto x = view(spectra);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues();
  const Eigen::MatrixXd vectors = solver.eigenvectors();

  PcaModel m;
  m.mean = Tensor({c});
  for (std::size_t j = 0; j < c; ++j) m.mean[j] = mean(static_cast<Eigen::Index>(j));
  m.components = Tensor({c, k});
  m.explained_variance = Tensor({k});
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = static_cast<Eigen::Index>(c - 1 - i);
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (std::size_t j = 0; j < c; ++j) m.components(j, i) = v(static_cast<Eigen::Index>(j));
    m.explained_variance[i] = std::max(0.0, values(src));
  }
  return m;
}

Tensor pca_transform(const PcaModel& model, const Tensor& spectra) {
  const std::size_t c = model.input_dim(), k = model.output_dim();
  check_matrix(spectra, c, "pca_transform");
  const auto x = view(spectra);
  Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data().data(), static_cast<Eigen::Index>(c));
  const RowMatrix out = (x.rowwise() - mean) * view(model.components);
  Tensor result({spectra.dim(0), k});
  Eigen::Map<RowMatrix>(result.data().data(), out.rows(), out.cols()) = out;
  return result;
}

Tensor pca_inverse(const PcaModel& model, const Tensor& scores) {
  const std::size_t c = model.input_dim(), k = model.output_dim();
  check_matrix(scores, k, "pca_inverse");
  Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data().data(), static_cast<Eigen::Index>(c));
  const RowMatrix out = (view(scores) * view(model.components).transpose()).rowwise() + mean;
  Tensor result({scores.dim(0), c});
  Eigen::Map<RowMatrix>(result.data().data(), out.rows(), out.cols()) = out;
  return result;
}

HsiCube pca_transform_cube(const PcaModel& model, const HsiCube& cube) {
  if (cube.bands != model.input_dim()) throw DimensionError("PCA model fitted on a different band count");
  Tensor all(Shape{cube.height * cube.width, cube.bands}, cube.reflectance);
  Tensor projected = pca_transform(model, all);
  HsiCube out;
  out.height = cube.height;
  out.width = cube.width;
  out.bands = model.output_dim();
  out.reflectance = projected.values();
  out.ground_truth = cube.ground_truth;
  out.num_classes = cube.num_classes;
  return out;
}

}  // namespace ladder
