#include "aefenet/decision.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace aefenet::decision {
namespace {

DecisionModel model_3d() {
  DecisionModel m;
  m.mean = Vector::Zero(3);
  m.mean << 1, -2, 0.5;
  m.std = Vector::Zero(3);
  m.std << 2, 0.5, 1;
  m.limit = 4.0;
  return m;
}

TEST(DetectionIndex, ZeroAtMeanAndCodeDimAtOneStd) {
  const auto m = model_3d();
  EXPECT_EQ(detection_index(m, m.mean), 0.0);
  const Vector shifted = m.mean + m.std;
  EXPECT_DOUBLE_EQ(detection_index(m, shifted), 3.0);
}

TEST(DetectionIndex, MatchesElementwiseRecomputation) {
  std::mt19937_64 rng(2);
  for (double p : {1.0, 2.0, 3.5}) {
    auto m = model_3d();
    m.p = p;
    for (int i = 0; i < 20; ++i) {
      const Vector c = oracle::random_matrix(3, 1, rng);
      double acc = 0.0;
      for (Index j = 0; j < 3; ++j) acc += std::pow(std::abs((c(j) - m.mean(j)) / m.std(j)), p);
      EXPECT_NEAR(detection_index(m, c), std::pow(acc, 1.0 / p), 1e-12);
    }
  }
}

TEST(DetectionIndex, TranslationCovariance) {
  std::mt19937_64 rng(3);
  auto m = model_3d();
  const Matrix codes = oracle::random_matrix(10, 3, rng);
  const Vector before = detection_index(m, codes);
  const Vector shift = oracle::random_matrix(3, 1, rng);
  m.mean += shift;
  const Matrix moved = codes.rowwise() + shift.transpose();
  EXPECT_LT((detection_index(m, moved) - before).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DetectionIndex, MonotoneInEachCoordinate) {
  const auto m = model_3d();
  Vector c = m.mean;
  double previous = detection_index(m, c);
  for (int i = 0; i < 5; ++i) {
    c(1) += 0.1;
    const double d = detection_index(m, c);
    EXPECT_GT(d, previous);
    previous = d;
  }
}

TEST(DetectionIndex, DimensionMismatch) {
  EXPECT_THROW(detection_index(model_3d(), Vector::Zero(2).eval()), InvalidArgument);
}

TEST(FitDecision, LimitIsOrderStatistic) {
  // One code column whose standardized absolute values are 1..1000 scaled.
  Matrix codes(1000, 1);
  for (Index i = 0; i < 1000; ++i) codes(i, 0) = static_cast<double>(i + 1);
  const auto m = fit_decision(codes, 0.99);
  const Vector d = detection_index(m, codes);
  std::vector<double> sorted(d.data(), d.data() + d.size());
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(m.limit, sorted[989]);
  const auto flags = alarms(m, d);
  EXPECT_LE(std::count(flags.begin(), flags.end(), true), 10);
}

TEST(FitDecision, IdenticalCodesDegenerate) {
  const Matrix codes = Matrix::Constant(20, 4, 0.3);
  const auto m = fit_decision(codes, 0.99);
  EXPECT_EQ(m.std.minCoeff(), kStdFloor);
  EXPECT_EQ(m.limit, 0.0);
  EXPECT_EQ(detection_index(m, codes).maxCoeff(), 0.0);
}

TEST(FitDecision, HeldOutGaussianFalseAlarms) {
  std::mt19937_64 rng(4);
  const auto m = fit_decision(oracle::random_matrix(5000, 20, rng), 0.99);
  const auto flags = alarms(m, detection_index(m, oracle::random_matrix(5000, 20, rng)));
  const double far = static_cast<double>(std::count(flags.begin(), flags.end(), true)) / 5000.0;
  EXPECT_NEAR(far, 0.01, 0.015);
}

TEST(FitDecision, Errors) {
  EXPECT_THROW(fit_decision(Matrix::Zero(1, 3), 0.99), InvalidArgument);
  EXPECT_THROW(fit_decision(Matrix::Zero(10, 3), 1.5), InvalidArgument);
}

TEST(Alarms, StrictInequality) {
  auto m = model_3d();
  Vector d(4);
  d << 1.0, 4.0, 4.0000001, 10.0;
  EXPECT_EQ(alarms(m, d), (std::vector<bool>{false, false, true, true}));
  EXPECT_EQ(alarms(m, Vector::Constant(3, 0.5)), std::vector<bool>(3, false));
}

TEST(Serialize, RoundTrip) {
  auto m = model_3d();
  m.p = 2.0;
  m.confidence = 0.95;
  io::ByteWriter out;
  write_decision(out, m);
  io::ByteReader in(out.bytes());
  const auto back = read_decision(in);
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.std, m.std);
  EXPECT_EQ(back.p, m.p);
  EXPECT_EQ(back.limit, m.limit);
  EXPECT_EQ(back.confidence, m.confidence);
}

}  // namespace
}  // namespace aefenet::decision
