#include "aefenet/numerics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"

namespace aefenet {
namespace {

TEST(Covariance, HandExpandedExample) {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  const Matrix c = numerics::covariance(x);
  EXPECT_NEAR(c(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(c(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(c(1, 0), -0.5, 1e-15);
  EXPECT_NEAR(c(1, 1), 0.5, 1e-15);
}

TEST(Covariance, IdenticalRowsGiveZero) {
  Matrix x = Matrix::Constant(5, 3, 2.5);
  EXPECT_EQ(numerics::covariance(x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Covariance, RowOrderDoesNotMatter) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(40, 4, rng);
  const Matrix reversed = x.colwise().reverse();
  EXPECT_LT((numerics::covariance(x) - numerics::covariance(reversed)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariance, RejectsSingleRow) {
  EXPECT_THROW(numerics::covariance(Matrix::Ones(1, 3)), InvalidArgument);
}

TEST(SymEig, IdentityAndDiagonal) {
  auto id = numerics::sym_eig(Matrix::Identity(3, 3));
  EXPECT_TRUE(id.eigenvalues.isApprox(Vector::Ones(3)));
  Matrix d = Vector::Map(std::vector<double>{3, 1, 2}.data(), 3).asDiagonal();
  auto e = numerics::sym_eig(d);
  EXPECT_NEAR(e.eigenvalues(0), 3.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1), 2.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(2), 1.0, 1e-14);
}

TEST(SymEig, RejectsAsymmetric) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 0.5;
  EXPECT_THROW(numerics::sym_eig(m), InvalidArgument);
}

TEST(SymEig, MatchesJacobiOracleAndReconstructs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 8;
    const Matrix a = oracle::random_matrix(n, n, rng);
    const Matrix m = 0.5 * (a + a.transpose());
    const auto eig = numerics::sym_eig(m);
    Vector ref;
    Matrix ref_vectors;
    oracle::jacobi_eig(m, ref, ref_vectors);
    const double scale = m.norm();
    EXPECT_LT((eig.eigenvalues - ref).cwiseAbs().maxCoeff(), 1e-8 * scale);
    const Matrix rebuilt =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    EXPECT_LT((rebuilt - m).norm(), 1e-8 * scale);
    EXPECT_LT((eig.eigenvectors.transpose() * eig.eigenvectors - Matrix::Identity(n, n)).norm(), 1e-8);
    for (Index i = 1; i < n; ++i) EXPECT_GE(eig.eigenvalues(i - 1), eig.eigenvalues(i));
  }
}

TEST(SingularValues, MatchesGramOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index cols = 1 + trial % 6;
    const Matrix m = oracle::random_matrix(150, cols, rng);
    const Vector s = numerics::singular_values(m);
    const Vector ref = oracle::gram_singular_values(m);
    EXPECT_LT((s - ref).cwiseAbs().maxCoeff(), 1e-8 * ref(0));
  }
}

TEST(SingularValues, ScaledIsometryAndZero) {
  std::mt19937_64 rng(9);
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::random_matrix(20, 4, rng))
                       .householderQ() * Matrix::Identity(20, 4);
  const Vector s = numerics::singular_values(2.5 * q);
  EXPECT_LT((s - Vector::Constant(4, 2.5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(numerics::singular_values(Matrix::Zero(10, 3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SingularValues, ScaleEquivariant) {
  std::mt19937_64 rng(13);
  const Matrix m = oracle::random_matrix(30, 5, rng);
  const Vector a = numerics::singular_values(3.7 * m);
  const Vector b = 3.7 * numerics::singular_values(m);
  EXPECT_LT(((a - b).array() / b.array()).abs().maxCoeff(), 1e-10);
}

TEST(SingularValues, RejectsWideMatrix) {
  EXPECT_THROW(numerics::singular_values(Matrix::Ones(3, 5)), InvalidArgument);
}

TEST(EmpiricalQuantile, OrderStatistics) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(numerics::empirical_quantile(v, 0.99), 99.0);
  EXPECT_EQ(numerics::empirical_quantile(v, 1.0), 100.0);
  std::vector<double> w(1000);
  std::iota(w.begin(), w.end(), 1.0);
  std::shuffle(w.begin(), w.end(), std::mt19937_64(1));
  EXPECT_EQ(numerics::empirical_quantile(w, 0.99), 990.0);
}

TEST(EmpiricalQuantile, RejectsBadInput) {
  std::vector<double> v{1.0, 2.0};
  EXPECT_THROW(numerics::empirical_quantile({}, 0.5), InvalidArgument);
  EXPECT_THROW(numerics::empirical_quantile(v, 0.0), InvalidArgument);
  EXPECT_THROW(numerics::empirical_quantile(v, 1.5), InvalidArgument);
}

TEST(RetainedComponents, DominatedSpectrum) {
  Vector eig(3);
  eig << 100, 0.01, 0.01;
  EXPECT_EQ(numerics::retained_components(eig, 0.9), 1);
  EXPECT_EQ(numerics::retained_components(eig, 1.0), 3);
  Vector rank2(3);
  rank2 << 2, 1, 0;
  EXPECT_EQ(numerics::retained_components(rank2, 1.0), 2);
}

}  // namespace
}  // namespace aefenet
