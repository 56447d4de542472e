#pragma once

#include "aefenet/common.hpp"

#include <span>

namespace aefenet::numerics {

/// Eigenpairs of a symmetric matrix, eigenvalues sorted in descending order.
/// Column i of `eigenvectors` pairs with `eigenvalues[i]`.
struct SymmetricEig {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Column means of `data` (rows are observations).
Vector column_means(const Matrix& data);

/// Sample covariance with the n-1 denominator. Requires at least two rows.
Matrix covariance(const Matrix& data);

/// Eigendecomposition of a symmetric matrix. Throws InvalidArgument when the
/// input deviates from symmetry by more than 1e-9 (relative to its norm).
SymmetricEig sym_eig(const Matrix& m);

/// Singular values of a tall matrix (rows >= cols), descending.
Vector singular_values(const Matrix& m);

/// The ceil(level * N)-th order statistic (1-indexed) of `values`.
/// `level` must lie in (0, 1].
double empirical_quantile(std::span<const double> values, double level);

/// Smallest count t such that the leading t eigenvalues carry at least
/// `fraction` of the total, capped at the numerical rank.
Index retained_components(const Vector& eigenvalues_desc, double fraction);

/// Number of eigenvalues above a relative tolerance of the largest one.
Index numerical_rank(const Vector& eigenvalues_desc);

}  // namespace aefenet::numerics
