#pragma once

#include "aefenet/autoencoder.hpp"
#include "aefenet/common.hpp"
#include "aefenet/ensemble.hpp"
#include "aefenet/serialize.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aefenet::transform {

using Subset = std::vector<Index>;

struct LayerConfig {
  Index window = 150;       // sliding-window width, must exceed the layer's column count
  Index subset_size = 5;    // columns per window matrix
  Index max_subsets = 30;   // cap on column combinations per layer
  double pca_variance = 0.95;
  Index code_dim = 20;
  std::vector<Index> hidden = {128, 64};
  ae::Variant variant = ae::Variant::plain;
  ae::SparseParams sparse;
  ae::TrainConfig training;
  std::uint64_t seed = 0;
};

/// Centering plus projection onto the leading covariance eigenvectors.
struct PcaReduction {
  Vector mean;
  Matrix projection;  // columns orthonormal

  Index retained() const { return projection.cols(); }
  Matrix apply(const Matrix& v) const;
};

struct TransformLayer {
  LayerConfig config;
  Index input_dim = 0;
  std::vector<Subset> subsets;
  PcaReduction pca;
  ae::Autoencoder autoencoder;
  Vector code_mean;
  Vector code_std;
  double final_loss = 0.0;
};

/// All C(m, h) combinations in lexicographic order when there are at most
/// `max_subsets`; otherwise `max_subsets` distinct combinations drawn with
/// the seeded generator, then sorted lexicographically.
std::vector<Subset> select_column_subsets(Index m, Index h, Index max_subsets, std::uint64_t seed);

/// Binomial coefficient, saturating at `cap + 1`.
Index binomial_capped(Index n, Index k, Index cap);

/// Pooled scalar normalization of a window followed by its singular values.
/// A window whose pooled std is below kStdFloor normalizes to zeros.
Vector normalized_singular_values(const Matrix& window);

/// Singular values of the (window x |subset|) block of `u` ending at row q.
Vector window_singular_values(const Matrix& u, Index q, std::span<const Index> subset,
                              Index window);

/// Fusion matrix: row r holds the concatenated singular values of every
/// subset for the window ending at row r + window - 1.
Matrix build_fused_matrix(const Matrix& u, const std::vector<Subset>& subsets, Index window);

PcaReduction fit_pca_reduction(const Matrix& v, double variance_fraction);

struct LayerFit {
  TransformLayer layer;
  FeatureMatrix output;
  std::vector<double> loss_history;
};

LayerFit fit_layer(const FeatureMatrix& u, const LayerConfig& config);
FeatureMatrix apply_layer(const TransformLayer& layer, const FeatureMatrix& u);

void write_layer(io::ByteWriter& out, const TransformLayer& layer);
TransformLayer read_layer(io::ByteReader& in);

}  // namespace aefenet::transform
