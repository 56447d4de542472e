#include "aefenet/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace aefenet {

bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace numerics {

Vector column_means(const Matrix& data) {
  if (data.rows() == 0) throw InvalidArgument("column_means: empty matrix");
  return data.colwise().mean().transpose();
}

Matrix covariance(const Matrix& data) {
  if (data.rows() < 2) {
    throw InvalidArgument("covariance: need at least 2 rows, got " + std::to_string(data.rows()));
  }
  const Matrix centered = data.rowwise() - data.colwise().mean();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  // Force exact symmetry; the product is symmetric only up to rounding.
  return 0.5 * (cov + cov.transpose());
}

SymmetricEig sym_eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("sym_eig: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidArgument("sym_eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: solver did not converge");

  // Eigen returns ascending order; flip to descending.
  SymmetricEig out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Vector singular_values(const Matrix& m) {
  if (m.rows() < m.cols()) {
    throw InvalidArgument("singular_values: need rows >= cols, got " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw InvalidArgument("singular_values: non-finite entry");
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(m);
  return svd.singularValues();
}

double empirical_quantile(std::span<const double> values, double level) {
  if (values.empty()) throw InvalidArgument("empirical_quantile: empty input");
  if (!(level > 0.0 && level <= 1.0)) {
    throw InvalidArgument("empirical_quantile: level must lie in (0, 1]");
  }
  const auto n = values.size();
  // Guard against level*n landing a hair above an integer (0.99*100 = 99.00000000000001).
  const double raw = level * static_cast<double>(n);
  auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

Index numerical_rank(const Vector& eigenvalues_desc) {
  if (eigenvalues_desc.size() == 0) return 0;
  const double top = eigenvalues_desc(0);
  if (!(top > 0.0)) return 0;
  const double tol = top * 1e-10 * static_cast<double>(eigenvalues_desc.size());
  Index rank = 0;
  for (Index i = 0; i < eigenvalues_desc.size(); ++i) {
    if (eigenvalues_desc(i) > tol) ++rank;
  }
  return rank;
}

Index retained_components(const Vector& eigenvalues_desc, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("variance fraction must lie in (0, 1]");
  }
  const Index rank = numerical_rank(eigenvalues_desc);
  if (rank == 0) throw NumericalError("degenerate covariance: no positive variance");
  const double total = eigenvalues_desc.head(rank).sum();
  double cumulative = 0.0;
  for (Index t = 0; t < rank; ++t) {
    cumulative += eigenvalues_desc(t);
    if (cumulative >= fraction * total * (1.0 - 1e-12)) return t + 1;
  }
  return rank;
}

}  // namespace numerics
}  // namespace aefenet
