#include "aefenet/transform.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"

namespace aefenet::transform {
namespace {

FeatureMatrix random_features(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureMatrix u;
  u.values = oracle::random_matrix(rows, cols, rng).cwiseAbs();
  for (Index j = 0; j < cols; ++j) u.feature_names.push_back("f" + std::to_string(j));
  return u;
}

LayerConfig small_config(Index window = 30) {
  LayerConfig c;
  c.window = window;
  c.code_dim = 4;
  c.hidden = {8};
  c.training.epochs = 20;
  c.seed = 99;
  return c;
}

TEST(Subsets, AllCombinationsWhenUnderCap) {
  const auto s = select_column_subsets(7, 5, 30, 1);
  ASSERT_EQ(s.size(), 21u);
  EXPECT_EQ(s.front(), (Subset{0, 1, 2, 3, 4}));
  EXPECT_EQ(s.back(), (Subset{2, 3, 4, 5, 6}));
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
}

TEST(Subsets, CappedSamplingIsDistinctAndSeeded) {
  const auto a = select_column_subsets(20, 5, 30, 7);
  ASSERT_EQ(a.size(), 30u);
  EXPECT_EQ(std::set<Subset>(a.begin(), a.end()).size(), 30u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (const auto& s : a) {
    EXPECT_EQ(s.size(), 5u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_LT(s.back(), 20);
  }
  EXPECT_EQ(a, select_column_subsets(20, 5, 30, 7));
  EXPECT_NE(a, select_column_subsets(20, 5, 30, 8));
}

TEST(Subsets, FullWidthAndErrors) {
  const auto s = select_column_subsets(4, 4, 30, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Subset{0, 1, 2, 3}));
  EXPECT_THROW(select_column_subsets(4, 5, 30, 1), InvalidArgument);
  EXPECT_THROW(select_column_subsets(4, 0, 30, 1), InvalidArgument);
}

TEST(Subsets, BinomialSaturates) {
  EXPECT_EQ(binomial_capped(7, 5, 100), 21);
  EXPECT_EQ(binomial_capped(20, 5, 30), 31);
  EXPECT_EQ(binomial_capped(200, 100, 1000), 1001);
}

TEST(WindowSingularValues, MatchesGramOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Matrix w = oracle::random_matrix(150, 5, rng);
    const double mean = w.mean();
    const double sd = std::sqrt((w.array() - mean).square().sum() / (w.size() - 1.0));
    const Matrix z = (w.array() - mean) / sd;
    const Vector ref = oracle::gram_singular_values(z);
    EXPECT_LT((normalized_singular_values(w) - ref).cwiseAbs().maxCoeff(), 1e-8 * ref(0));
  }
}

TEST(WindowSingularValues, AffineInvariance) {
  std::mt19937_64 rng(4);
  const Matrix w = oracle::random_matrix(150, 5, rng);
  const Vector base = normalized_singular_values(w);
  for (double a : {0.001, 0.5, 3.0, 1e4}) {
    for (double b : {-50.0, 0.0, 7.5}) {
      const Matrix moved = (a * w).array() + b;
      EXPECT_LT((normalized_singular_values(moved) - base).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(WindowSingularValues, ConstantWindowIsZero) {
  EXPECT_EQ(normalized_singular_values(Matrix::Constant(20, 3, 4.2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(WindowSingularValues, SelectsRowsAndColumns) {
  const auto u = random_features(50, 6, 5);
  const Subset s = {1, 3, 4};
  Matrix block(10, 3);
  for (Index c = 0; c < 3; ++c) block.col(c) = u.values.col(s[c]).segment(20, 10);
  EXPECT_EQ(window_singular_values(u.values, 29, s, 10), normalized_singular_values(block));
  EXPECT_THROW(window_singular_values(u.values, 8, s, 10), InvalidArgument);
}

TEST(FusedMatrix, ShapeAndBlocks) {
  const auto u = random_features(400, 7, 6);
  const auto subsets = select_column_subsets(7, 5, 30, 1);
  const Matrix v = build_fused_matrix(u.values, subsets, 150);
  EXPECT_EQ(v.rows(), 251);
  EXPECT_EQ(v.cols(), 105);
  EXPECT_EQ(v.row(10).segment(5, 5).transpose(),
            window_singular_values(u.values, 159, subsets[1], 150));
  const Matrix whole = build_fused_matrix(u.values, {Subset{0, 1, 2, 3, 4, 5, 6}}, 150);
  EXPECT_EQ(whole.cols(), 7);
  EXPECT_THROW(build_fused_matrix(u.values.topRows(100), subsets, 150), InvalidArgument);
}

TEST(FusedMatrix, RowCountForLongSequence) {
  const auto u = random_features(4000, 7, 7);
  EXPECT_EQ(build_fused_matrix(u.values, {Subset{0, 1, 2, 3, 4}}, 150).rows(), 3851);
}

TEST(PcaReduction, LowRankAndVarianceAccounting) {
  std::mt19937_64 rng(8);
  const Matrix v = oracle::random_matrix(200, 3, rng) * oracle::random_matrix(3, 9, rng);
  EXPECT_EQ(fit_pca_reduction(v, 0.999).retained(), 3);
  EXPECT_EQ(fit_pca_reduction(v, 1.0).retained(), 3);

  const Matrix noisy = v + 0.3 * oracle::random_matrix(200, 9, rng);
  const auto pca = fit_pca_reduction(noisy, 0.9);
  const Matrix scores = pca.apply(noisy);
  const Matrix centered = noisy.rowwise() - noisy.colwise().mean();
  EXPECT_GE(scores.squaredNorm() / centered.squaredNorm(), 0.9);
  const Matrix g = pca.projection.transpose() * pca.projection;
  EXPECT_LT((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(fit_pca_reduction(Matrix::Constant(10, 3, 1.0), 0.9), NumericalError);
}

TEST(Layer, FitMatchesApplyAndAccountsRows) {
  const auto u = random_features(200, 7, 9);
  const auto fit = fit_layer(u, small_config());
  EXPECT_EQ(fit.output.rows(), 171);
  EXPECT_EQ(fit.output.cols(), 4);
  EXPECT_EQ(fit.output.layer, 1);
  EXPECT_EQ(fit.output.sample_offset, 29);
  EXPECT_EQ(fit.output.feature_names.front(), "l1_code0");
  EXPECT_EQ(fit.loss_history.size(), 20u);
  EXPECT_EQ(apply_layer(fit.layer, u).values, fit.output.values);
  EXPECT_EQ(fit.layer.subsets.size(), 21u);
}

TEST(Layer, StackedRowAccounting) {
  auto c = small_config(150);
  c.code_dim = 6;
  c.training.epochs = 2;
  const auto u0 = random_features(4000, 7, 10);
  const auto l1 = fit_layer(u0, c);
  c.seed = 100;
  const auto l2 = fit_layer(l1.output, c);
  EXPECT_EQ(l1.output.rows(), 3851);
  EXPECT_EQ(l2.output.rows(), 3702);
  EXPECT_EQ(l2.output.sample_offset, 298);
}

TEST(Layer, ShiftedInputShiftsOutput) {
  const auto u = random_features(200, 7, 11);
  const auto fit = fit_layer(u, small_config());
  FeatureMatrix shifted = u;
  shifted.values = u.values.bottomRows(190);
  const auto out = apply_layer(fit.layer, shifted);
  EXPECT_EQ(out.rows(), 161);
  EXPECT_LT((out.values - fit.output.values.bottomRows(161)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Layer, AffineRescaledInputGivesSameSingularValues) {
  const auto u = random_features(120, 7, 12);
  const auto subsets = select_column_subsets(7, 5, 30, 1);
  const Matrix moved = (2.5 * u.values).array() - 4.0;
  EXPECT_LT((build_fused_matrix(moved, subsets, 30) - build_fused_matrix(u.values, subsets, 30))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(Layer, Deterministic) {
  const auto u = random_features(150, 7, 13);
  const auto a = fit_layer(u, small_config());
  const auto b = fit_layer(u, small_config());
  EXPECT_EQ(a.output.values, b.output.values);
  EXPECT_EQ(a.layer.subsets, b.layer.subsets);
  auto other = small_config();
  other.seed = 5;
  EXPECT_NE(fit_layer(u, other).output.values, a.output.values);
}

TEST(Layer, Errors) {
  const auto u = random_features(100, 7, 14);
  EXPECT_THROW(fit_layer(u, small_config(7)), InvalidArgument);
  EXPECT_THROW(fit_layer(u, small_config(101)), InvalidArgument);
  const auto fit = fit_layer(u, small_config());
  EXPECT_THROW(apply_layer(fit.layer, random_features(100, 6, 1)), InvalidArgument);
}

TEST(Layer, SerializationRoundTrip) {
  const auto u = random_features(120, 7, 15);
  const auto fit = fit_layer(u, small_config());
  io::ByteWriter out;
  write_layer(out, fit.layer);
  io::ByteReader in(out.bytes());
  const auto back = read_layer(in);
  EXPECT_EQ(apply_layer(back, u).values, fit.output.values);
  EXPECT_EQ(back.code_std, fit.layer.code_std);
}

}  // namespace
}  // namespace aefenet::transform
