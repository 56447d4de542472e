#include "aefenet/transform.hpp"

#include "aefenet/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace aefenet::transform {

Index binomial_capped(Index n, Index k, Index cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  // Multiplicative form stays exact: each partial product is itself a binomial.
  unsigned __int128 result = 1;
  for (Index i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
    if (result > static_cast<unsigned __int128>(cap)) return cap + 1;
  }
  return static_cast<Index>(result);
}

std::vector<Subset> select_column_subsets(Index m, Index h, Index max_subsets,
                                          std::uint64_t seed) {
  if (h <= 0 || h > m) {
    throw InvalidArgument("subset size " + std::to_string(h) + " must lie in (0, " +
                          std::to_string(m) + "]");
  }
  if (max_subsets <= 0) throw InvalidArgument("max_subsets must be positive");

  std::vector<Subset> out;
  if (binomial_capped(m, h, max_subsets) <= max_subsets) {
    Subset current(static_cast<std::size_t>(h));
    std::iota(current.begin(), current.end(), Index{0});
    while (true) {
      out.push_back(current);
      // Advance to the next combination in lexicographic order.
      Index i = h - 1;
      while (i >= 0 && current[static_cast<std::size_t>(i)] == m - h + i) --i;
      if (i < 0) break;
      ++current[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < h; ++j) {
        current[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
    return out;
  }

  std::mt19937_64 rng(seed);
  std::set<Subset> chosen;
  std::vector<Index> pool(static_cast<std::size_t>(m));
  while (static_cast<Index>(chosen.size()) < max_subsets) {
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates: the first h slots become a uniform random subset.
    for (Index i = 0; i < h; ++i) {
      std::uniform_int_distribution<Index> pick(i, m - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    Subset s(pool.begin(), pool.begin() + h);
    std::sort(s.begin(), s.end());
    chosen.insert(std::move(s));
  }
  return {chosen.begin(), chosen.end()};
}

Vector normalized_singular_values(const Matrix& window) {
  const double count = static_cast<double>(window.size());
  const double mean = window.mean();
  const double var = count > 1 ? (window.array() - mean).square().sum() / (count - 1.0) : 0.0;
  const double std = std::sqrt(var);
  // A flat window carries no structure; its rounding residue is not amplified.
  if (std < kStdFloor) return Vector::Zero(std::min(window.rows(), window.cols()));
  return numerics::singular_values((window.array() - mean).matrix() / std);
}

Vector window_singular_values(const Matrix& u, Index q, std::span<const Index> subset,
                              Index window) {
  if (q - window + 1 < 0 || q >= u.rows()) {
    throw InvalidArgument("window ending at row " + std::to_string(q) + " with width " +
                          std::to_string(window) + " falls outside the feature matrix");
  }
  Matrix block(window, static_cast<Index>(subset.size()));
  for (std::size_t c = 0; c < subset.size(); ++c) {
    if (subset[c] < 0 || subset[c] >= u.cols()) throw InvalidArgument("subset column out of range");
    block.col(static_cast<Index>(c)) = u.col(subset[c]).segment(q - window + 1, window);
  }
  return normalized_singular_values(block);
}

Matrix build_fused_matrix(const Matrix& u, const std::vector<Subset>& subsets, Index window) {
  if (u.rows() < window) {
    throw InvalidArgument("feature matrix has " + std::to_string(u.rows()) +
                          " rows, fewer than the window width " + std::to_string(window));
  }
  if (subsets.empty()) throw InvalidArgument("build_fused_matrix: no column subsets");
  const Index rows = u.rows() - window + 1;
  Index cols = 0;
  for (const auto& s : subsets) cols += static_cast<Index>(s.size());
  Matrix v(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    Index col = 0;
    for (const auto& s : subsets) {
      const Vector sv = window_singular_values(u, r + window - 1, s, window);
      v.row(r).segment(col, sv.size()) = sv.transpose();
      col += sv.size();
    }
  }
  return v;
}

Matrix PcaReduction::apply(const Matrix& v) const {
  if (v.cols() != mean.size()) throw InvalidArgument("PCA reduction: dimension mismatch");
  return (v.rowwise() - mean.transpose()) * projection;
}

PcaReduction fit_pca_reduction(const Matrix& v, double variance_fraction) {
  if (v.rows() < 2) throw InvalidArgument("PCA reduction: need at least 2 rows");
  PcaReduction out;
  out.mean = numerics::column_means(v);
  const auto eig = numerics::sym_eig(numerics::covariance(v));
  const Index t = numerics::retained_components(eig.eigenvalues, variance_fraction);
  out.projection = eig.eigenvectors.leftCols(t);
  return out;
}

namespace {

void check_layer_input(const FeatureMatrix& u, const LayerConfig& config) {
  if (config.window <= u.cols()) {
    throw InvalidArgument("window width " + std::to_string(config.window) +
                          " must exceed the column count " + std::to_string(u.cols()));
  }
  if (u.rows() < config.window) {
    throw InvalidArgument("layer " + std::to_string(u.layer) + ": " + std::to_string(u.rows()) +
                          " rows is shorter than the window width " +
                          std::to_string(config.window));
  }
}

std::vector<std::string> code_names(int layer, Index code_dim) {
  std::vector<std::string> names;
  for (Index j = 0; j < code_dim; ++j) {
    names.push_back("l" + std::to_string(layer) + "_code" + std::to_string(j));
  }
  return names;
}

}  // namespace

FeatureMatrix apply_layer(const TransformLayer& layer, const FeatureMatrix& u) {
  if (u.cols() != layer.input_dim) {
    throw InvalidArgument("transform layer expects " + std::to_string(layer.input_dim) +
                          " columns, got " + std::to_string(u.cols()));
  }
  check_layer_input(u, layer.config);
  const Matrix fused = build_fused_matrix(u.values, layer.subsets, layer.config.window);
  const Matrix reduced = layer.pca.apply(fused);
  FeatureMatrix out;
  out.values = ae::forward(layer.autoencoder, reduced).code;
  out.layer = u.layer + 1;
  out.feature_names = code_names(out.layer, layer.autoencoder.code_dim);
  out.sample_offset = u.sample_offset + layer.config.window - 1;
  out.validate();
  return out;
}

LayerFit fit_layer(const FeatureMatrix& u, const LayerConfig& config) {
  check_layer_input(u, config);
  LayerFit fit;
  TransformLayer& layer = fit.layer;
  layer.config = config;
  layer.input_dim = u.cols();
  layer.subsets = select_column_subsets(u.cols(), config.subset_size, config.max_subsets,
                                        mix_seed(config.seed, 1));
  const Matrix fused = build_fused_matrix(u.values, layer.subsets, config.window);
  layer.pca = fit_pca_reduction(fused, config.pca_variance);
  const Matrix reduced = layer.pca.apply(fused);

  auto ae_model = ae::init_autoencoder(reduced.cols(), config.code_dim, config.variant,
                                       mix_seed(config.seed, 2), config.hidden, config.sparse);
  ae::TrainConfig training = config.training;
  training.seed = mix_seed(config.seed, 3);
  auto trained = ae::train(std::move(ae_model), reduced, training);
  layer.autoencoder = std::move(trained.model);
  fit.loss_history = std::move(trained.history);
  layer.final_loss = fit.loss_history.empty()
                         ? ae::loss(layer.autoencoder, reduced, training).total
                         : fit.loss_history.back();

  fit.output = apply_layer(layer, u);
  const ScalerStats code_stats = fit_standardize(fit.output.values);
  layer.code_mean = code_stats.mean;
  layer.code_std = code_stats.std;
  return fit;
}

// ---------------------------------------------------------------------------
// Serialization

void write_layer(io::ByteWriter& out, const TransformLayer& layer) {
  const auto& c = layer.config;
  out.i64(c.window);
  out.i64(c.subset_size);
  out.i64(c.max_subsets);
  out.f64(c.pca_variance);
  out.i64(c.code_dim);
  out.u64(c.hidden.size());
  for (auto h : c.hidden) out.i64(h);
  out.u8(static_cast<std::uint8_t>(c.variant));
  out.f64(c.sparse.target);
  out.f64(c.sparse.weight);
  out.i64(c.training.epochs);
  out.f64(c.training.learning_rate);
  out.f64(c.training.l1_weight);
  out.f64(c.training.kl_weight);
  out.f64(c.training.beta1);
  out.f64(c.training.beta2);
  out.f64(c.training.adam_epsilon);
  out.u64(c.seed);

  out.i64(layer.input_dim);
  out.u64(layer.subsets.size());
  for (const auto& s : layer.subsets) {
    out.u64(s.size());
    for (auto i : s) out.i64(i);
  }
  out.vec(layer.pca.mean);
  out.mat(layer.pca.projection);
  ae::write_autoencoder(out, layer.autoencoder);
  out.vec(layer.code_mean);
  out.vec(layer.code_std);
  out.f64(layer.final_loss);
}

TransformLayer read_layer(io::ByteReader& in) {
  TransformLayer layer;
  auto& c = layer.config;
  c.window = in.i64();
  c.subset_size = in.i64();
  c.max_subsets = in.i64();
  c.pca_variance = in.f64();
  c.code_dim = in.i64();
  const auto nh = in.u64();
  if (nh > 64) throw FormatError("transform layer: implausible hidden layer count");
  c.hidden.clear();
  for (std::uint64_t i = 0; i < nh; ++i) c.hidden.push_back(in.i64());
  const auto variant = in.u8();
  if (variant > 2) throw FormatError("transform layer: bad variant tag");
  c.variant = static_cast<ae::Variant>(variant);
  c.sparse.target = in.f64();
  c.sparse.weight = in.f64();
  c.training.epochs = in.i64();
  c.training.learning_rate = in.f64();
  c.training.l1_weight = in.f64();
  c.training.kl_weight = in.f64();
  c.training.beta1 = in.f64();
  c.training.beta2 = in.f64();
  c.training.adam_epsilon = in.f64();
  c.seed = in.u64();

  layer.input_dim = in.i64();
  const auto ns = in.u64();
  if (ns > (1ULL << 20)) throw FormatError("transform layer: implausible subset count");
  for (std::uint64_t i = 0; i < ns; ++i) {
    const auto len = in.u64();
    if (len > (1ULL << 16)) throw FormatError("transform layer: implausible subset size");
    Subset s;
    for (std::uint64_t j = 0; j < len; ++j) s.push_back(in.i64());
    layer.subsets.push_back(std::move(s));
  }
  layer.pca.mean = in.vec();
  layer.pca.projection = in.mat();
  layer.autoencoder = ae::read_autoencoder(in);
  layer.code_mean = in.vec();
  layer.code_std = in.vec();
  layer.final_loss = in.f64();
  return layer;
}

}  // namespace aefenet::transform
