#include "aefenet/autoencoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace aefenet::ae {
namespace {

// Straight re-evaluation of the network, one layer at a time.
Matrix reference_layer(const DenseLayer& l, const Matrix& x) {
  Matrix z = x * l.weights;
  z.rowwise() += l.bias.transpose();
  for (Index i = 0; i < z.size(); ++i) {
    double& v = z.data()[i];
    if (l.activation == Activation::relu) v = v > 0 ? v : 0.0;
    if (l.activation == Activation::sigmoid) v = 1.0 / (1.0 + std::exp(-v));
  }
  return z;
}

TEST(Init, ShapesFollowTheFunnel) {
  const auto model = init_autoencoder(105, 20, Variant::plain, 1);
  ASSERT_EQ(model.encoder.size(), 3u);
  EXPECT_EQ(model.encoder[0].weights.rows(), 105);
  EXPECT_EQ(model.encoder[0].weights.cols(), 128);
  EXPECT_EQ(model.encoder[1].weights.cols(), 64);
  EXPECT_EQ(model.encoder[2].weights.cols(), 20);
  EXPECT_EQ(model.decoder[0].weights.rows(), 20);
  EXPECT_EQ(model.decoder[2].weights.cols(), 105);
  EXPECT_EQ(model.encoder[0].activation, Activation::relu);
  EXPECT_EQ(model.encoder[2].activation, Activation::linear);
  EXPECT_EQ(model.decoder[2].activation, Activation::linear);
  EXPECT_EQ(model.encoder[0].bias.cwiseAbs().maxCoeff(), 0.0);
  const double bound = std::sqrt(6.0 / (105 + 128));
  EXPECT_LE(model.encoder[0].weights.cwiseAbs().maxCoeff(), bound);
}

TEST(Init, VariantHeads) {
  EXPECT_EQ(init_autoencoder(6, 2, Variant::variational, 1, {4}).encoder.back().weights.cols(), 4);
  EXPECT_EQ(init_autoencoder(6, 2, Variant::sparse, 1, {4}).encoder.back().activation,
            Activation::sigmoid);
}

TEST(Init, SeedDeterminism) {
  const auto a = init_autoencoder(10, 3, Variant::plain, 42);
  const auto b = init_autoencoder(10, 3, Variant::plain, 42);
  const auto c = init_autoencoder(10, 3, Variant::plain, 43);
  for (std::size_t l = 0; l < a.layer_count(); ++l) EXPECT_EQ(a.layer(l).weights, b.layer(l).weights);
  EXPECT_NE(a.layer(0).weights, c.layer(0).weights);
}

TEST(Forward, ZeroNetGivesZeros) {
  auto model = init_autoencoder(5, 2, Variant::plain, 1, {3});
  for (std::size_t l = 0; l < model.layer_count(); ++l) model.layer(l).weights.setZero();
  const auto out = forward(model, Vector::Ones(5).eval());
  EXPECT_EQ(out.code.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.reconstruction.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, IdentityLayerReconstructs) {
  Autoencoder model;
  model.encoder.push_back({Matrix::Identity(3, 3), Vector::Zero(3), Activation::linear});
  model.decoder.push_back({Matrix::Identity(3, 3), Vector::Zero(3), Activation::linear});
  model.code_dim = 3;
  Vector x(3);
  x << 1.5, -2, 0.25;
  EXPECT_EQ(forward(model, x).reconstruction, x);
}

TEST(Forward, MatchesLayerByLayerReevaluation) {
  std::mt19937_64 rng(8);
  for (auto variant : {Variant::plain, Variant::sparse, Variant::variational}) {
    auto model = init_autoencoder(7, 3, variant, 5, {6, 4});
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      model.layer(l).bias = oracle::random_matrix(model.layer(l).bias.size(), 1, rng);
    }
    const Matrix x = oracle::random_matrix(9, 7, rng);
    Matrix h = x;
    for (const auto& l : model.encoder) h = reference_layer(l, h);
    const Matrix code = h.leftCols(3);
    Matrix y = code;
    for (const auto& l : model.decoder) y = reference_layer(l, y);
    const auto out = forward(model, x);
    EXPECT_LT((out.code - code).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((out.reconstruction - y).cwiseAbs().maxCoeff(), 1e-12);
    const auto single = forward(model, Vector(x.row(2).transpose()));
    EXPECT_LT((single.code - code.row(2).transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, RejectsWrongWidth) {
  const auto model = init_autoencoder(5, 2, Variant::plain, 1, {3});
  EXPECT_THROW(forward(model, Matrix::Ones(2, 4).eval()), InvalidArgument);
}

TEST(Loss, PerfectReconstructionZeroCode) {
  Autoencoder model;
  model.encoder.push_back({Matrix::Zero(2, 1), Vector::Zero(1), Activation::linear});
  model.decoder.push_back({Matrix::Zero(1, 2), Vector::Zero(2), Activation::linear});
  model.code_dim = 1;
  EXPECT_EQ(loss(model, Matrix::Zero(4, 2), TrainConfig{}).total, 0.0);
}

TEST(Loss, SparseKlValues) {
  EXPECT_EQ(sparse_kl(0.05, 0.05), 0.0);
  const double expected = 0.05 * std::log(0.05 / 0.5) + 0.95 * std::log(0.95 / 0.5);
  EXPECT_NEAR(sparse_kl(0.05, 0.5), expected, 1e-15);
  EXPECT_THROW(sparse_kl(0.05, 1.0), NumericalError);
  EXPECT_THROW(sparse_kl(0.05, 0.0), NumericalError);
}

TEST(Loss, GaussianKlIdentity) {
  EXPECT_EQ(gaussian_kl(Vector::Zero(3), Vector::Zero(3)), 0.0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vector mu = oracle::random_matrix(4, 1, rng);
    const Vector logvar = oracle::random_matrix(4, 1, rng);
    EXPECT_GE(gaussian_kl(mu, logvar), 0.0);
  }
  Vector mu(1), logvar(1);
  mu << 1.0;
  logvar << 0.0;
  EXPECT_NEAR(gaussian_kl(mu, logvar), 0.5, 1e-15);
}

TEST(Gradients, ZeroNetZeroBatch) {
  auto model = init_autoencoder(6, 2, Variant::plain, 1, {4});
  for (std::size_t l = 0; l < model.layer_count(); ++l) model.layer(l).weights.setZero();
  const auto g = gradients(model, Matrix::Zero(5, 6), TrainConfig{});
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

class GradientCheck : public ::testing::TestWithParam<Variant> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  auto model = init_autoencoder(6, 2, GetParam(), 9, {4});
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    model.layer(l).bias = 0.1 * oracle::random_matrix(model.layer(l).bias.size(), 1, rng);
  }
  const Matrix batch = oracle::random_matrix(10, 6, rng);
  const Matrix noise =
      GetParam() == Variant::variational ? oracle::random_matrix(10, 2, rng) : Matrix();
  TrainConfig config;
  config.l1_weight = 0.5;
  config.kl_weight = 0.8;
  const auto analytic = gradients(model, batch, config, noise);
  const auto numeric = oracle::finite_difference_gradients(model, batch, config, noise, 1e-5);
  ASSERT_EQ(analytic.layers.size(), numeric.layers.size());
  for (std::size_t l = 0; l < analytic.layers.size(); ++l) {
    EXPECT_LT(oracle::max_relative_error(analytic.layers[l].weights, numeric.layers[l].weights), 1e-4)
        << "tensor W" << l;
    EXPECT_LT(oracle::max_relative_error(analytic.layers[l].bias, numeric.layers[l].bias), 1e-4)
        << "tensor b" << l;
  }
  EXPECT_NEAR(analytic.loss.total, loss(model, batch, config, noise).total, 1e-14);
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GradientCheck,
                         ::testing::Values(Variant::plain, Variant::sparse, Variant::variational),
                         [](const auto& info) { return to_string(info.param); });

TEST(Gradients, DoublingLambdaDoublesPenaltyGradient) {
  Autoencoder model;
  model.encoder.push_back({Matrix::Constant(3, 2, 0.3), Vector::Zero(2), Activation::linear});
  model.decoder.push_back({Matrix::Constant(2, 3, -0.2), Vector::Zero(3), Activation::linear});
  model.code_dim = 2;
  std::mt19937_64 rng(2);
  const Matrix batch = oracle::random_matrix(6, 3, rng);
  TrainConfig none, one, two;
  none.l1_weight = 0.0;
  one.l1_weight = 1.0;
  two.l1_weight = 2.0;
  const Matrix g0 = gradients(model, batch, none).layers[0].weights;
  const Matrix g1 = gradients(model, batch, one).layers[0].weights - g0;
  const Matrix g2 = gradients(model, batch, two).layers[0].weights - g0;
  EXPECT_LT((g2 - 2.0 * g1).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(g1.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adam, FirstStepClosedForm) {
  AdamParams p;
  Matrix w = Matrix::Constant(1, 1, 1.0);
  Matrix m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
  adam_update(w, Matrix::Constant(1, 1, 1.0), m, v, 1, p);
  EXPECT_NEAR(w(0, 0), 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto model = init_autoencoder(4, 2, Variant::plain, 3, {3});
  const auto before = model;
  auto state = init_adam(model);
  Gradients g;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    g.layers.push_back({Matrix::Zero(model.layer(l).weights.rows(), model.layer(l).weights.cols()),
                        Vector::Zero(model.layer(l).bias.size())});
  }
  for (int i = 0; i < 10; ++i) adam_step(model, g, state, AdamParams{});
  EXPECT_EQ(state.step, 10);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    EXPECT_EQ(model.layer(l).weights, before.layer(l).weights);
  }
}

Matrix rank_one_data(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix a = oracle::random_matrix(n, 1, rng);
  const Matrix b = oracle::random_matrix(1, m, rng);
  return a * b;
}

TEST(Train, CompressesRankOneData) {
  const Matrix data = rank_one_data(64, 8, 5);
  TrainConfig config;
  config.epochs = 1500;
  config.learning_rate = 3e-3;
  config.l1_weight = 0.0;
  const auto init = init_autoencoder(8, 2, Variant::plain, 1, {16});
  const double initial = loss(init, data, config).mse;
  const auto result = train(init, data, config);
  EXPECT_LT(loss(result.model, data, config).mse, 0.01 * initial);
  EXPECT_EQ(result.history.size(), 1500u);
}

TEST(Train, ZeroEpochsReturnsInit) {
  const auto init = init_autoencoder(8, 2, Variant::plain, 1, {16});
  TrainConfig config;
  config.epochs = 0;
  const auto result = train(init, rank_one_data(10, 8, 1), config);
  EXPECT_TRUE(result.history.empty());
  EXPECT_EQ(result.model.layer(0).weights, init.layer(0).weights);
}

TEST(Train, LargeLambdaShrinksCodes) {
  const Matrix data = rank_one_data(40, 6, 9);
  const auto init = init_autoencoder(6, 2, Variant::plain, 4, {8});
  TrainConfig free, heavy;
  free.epochs = heavy.epochs = 300;
  free.l1_weight = 0.0;
  heavy.l1_weight = 1e3;
  const auto a = forward(train(init, data, free).model, data).code.cwiseAbs().mean();
  const auto b = forward(train(init, data, heavy).model, data).code.cwiseAbs().mean();
  EXPECT_LT(b, a);
}

TEST(Train, DeterministicForEveryVariant) {
  const Matrix data = rank_one_data(20, 6, 3);
  for (auto variant : {Variant::plain, Variant::sparse, Variant::variational}) {
    TrainConfig config;
    config.epochs = 50;
    config.seed = 17;
    const auto init = init_autoencoder(6, 2, variant, 2, {5});
    const auto a = train(init, data, config);
    const auto b = train(init, data, config);
    EXPECT_EQ(a.history, b.history);
    for (std::size_t l = 0; l < a.model.layer_count(); ++l) {
      EXPECT_EQ(a.model.layer(l).weights, b.model.layer(l).weights);
    }
  }
}

TEST(Train, LossTrendsDownward) {
  const Matrix data = rank_one_data(50, 6, 12);
  for (auto variant : {Variant::plain, Variant::sparse, Variant::variational}) {
    TrainConfig config;
    config.epochs = 400;
    const auto h = train(init_autoencoder(6, 2, variant, 2, {5}), data, config).history;
    double head = 0, tail = 0;
    for (int i = 0; i < 100; ++i) {
      head += h[static_cast<std::size_t>(i)];
      tail += h[h.size() - 100 + static_cast<std::size_t>(i)];
    }
    EXPECT_LE(tail, head) << to_string(variant);
  }
}

TEST(Train, DivergenceCarriesHistory) {
  Matrix data = rank_one_data(10, 4, 1);
  TrainConfig config;
  config.epochs = 200;
  config.learning_rate = 1e6;
  config.l1_weight = 0.0;
  const auto init = init_autoencoder(4, 2, Variant::plain, 1, {8});
  data *= 1e200;
  try {
    train(init, data, config);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_LT(e.history().size(), 200u);
  }
}

TEST(Serialize, RoundTripIsExact) {
  for (auto variant : {Variant::plain, Variant::sparse, Variant::variational}) {
    const auto model = init_autoencoder(7, 3, variant, 11, {5, 4});
    io::ByteWriter out;
    write_autoencoder(out, model);
    io::ByteReader in(out.bytes());
    const auto back = read_autoencoder(in);
    EXPECT_EQ(back.variant, model.variant);
    EXPECT_EQ(back.code_dim, model.code_dim);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      EXPECT_EQ(back.layer(l).weights, model.layer(l).weights);
      EXPECT_EQ(back.layer(l).activation, model.layer(l).activation);
    }
  }
}

}  // namespace
}  // namespace aefenet::ae
