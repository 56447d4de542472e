#include "aefenet/detectors.hpp"

#include "aefenet/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace aefenet::detectors {

Matrix lag_augment(const Matrix& data, Index lags) {
  if (lags < 0) throw InvalidArgument("lags must be non-negative");
  if (data.rows() < lags + 1) {
    throw InvalidArgument("sequence of " + std::to_string(data.rows()) +
                          " rows is shorter than lags + 1 = " + std::to_string(lags + 1));
  }
  const Index n = data.rows() - lags;
  const Index m = data.cols();
  Matrix out(n, m * (lags + 1));
  for (Index lag = 0; lag <= lags; ++lag) {
    out.middleCols(lag * m, m) = data.middleRows(lags - lag, n);
  }
  return out;
}

Matrix lag_augment_aligned(const Matrix& data, Index lags) {
  const Matrix core = lag_augment(data, lags);
  if (lags == 0) return core;
  Matrix out(data.rows(), core.cols());
  for (Index t = 0; t < lags; ++t) out.row(t) = core.row(0);
  out.bottomRows(core.rows()) = core;
  return out;
}

// ---------------------------------------------------------------------------
// PCA / DPCA

namespace {

PcaDetector fit_pca_on(const Matrix& augmented, double variance_fraction) {
  if (augmented.rows() < 2) throw InvalidArgument("PCA detector: need at least 2 training rows");
  PcaDetector model;
  model.scaler = fit_standardize(augmented);
  const Matrix z = apply_standardize(augmented, model.scaler);
  const auto eig = numerics::sym_eig(numerics::covariance(z));
  const Index t = numerics::retained_components(eig.eigenvalues, variance_fraction);
  model.loadings = eig.eigenvectors.leftCols(t);
  model.retained_eigenvalues = eig.eigenvalues.head(t);
  return model;
}

}  // namespace

PcaDetector fit_pca_detector(const Matrix& train, double variance_fraction) {
  auto model = fit_pca_on(train, variance_fraction);
  model.input_dim = train.cols();
  return model;
}

PcaDetector fit_dpca_detector(const Matrix& train, Index lags, double variance_fraction) {
  auto model = fit_pca_on(lag_augment(train, lags), variance_fraction);
  model.lags = lags;
  model.input_dim = train.cols();
  return model;
}

PcaScore score_pca(const PcaDetector& model, const Vector& x) {
  if (x.size() != model.loadings.rows()) {
    throw InvalidArgument("score_pca: sample has " + std::to_string(x.size()) +
                          " entries, model expects " + std::to_string(model.loadings.rows()));
  }
  const Vector z = (x - model.scaler.mean).cwiseQuotient(model.scaler.std);
  const Vector scores = model.loadings.transpose() * z;
  PcaScore out;
  out.t2 = scores.cwiseAbs2().cwiseQuotient(model.retained_eigenvalues).sum();
  out.q = (z - model.loadings * scores).squaredNorm();
  return out;
}

Matrix score_pca_sequence(const PcaDetector& model, const Matrix& raw) {
  if (raw.cols() != model.input_dim) {
    throw InvalidArgument("PCA detector: data has " + std::to_string(raw.cols()) +
                          " columns, model expects " + std::to_string(model.input_dim));
  }
  const Matrix z = apply_standardize(lag_augment_aligned(raw, model.lags), model.scaler);
  const Matrix scores = z * model.loadings;
  Matrix out(raw.rows(), 2);
  const Vector inv_lambda = model.retained_eigenvalues.cwiseInverse();
  out.col(0) = scores.cwiseAbs2() * inv_lambda;
  out.col(1) = (z - scores * model.loadings.transpose()).rowwise().squaredNorm();
  return out;
}

// ---------------------------------------------------------------------------
// Mahalanobis distance

std::string to_string(MdVariant v) {
  switch (v) {
    case MdVariant::md1: return "md1";
    case MdVariant::md2: return "md2";
    case MdVariant::md3: return "md3";
  }
  return "md1";
}

Vector MdDetector::embed(const Vector& x) const {
  if (x.size() != scaler.mean.size()) {
    throw InvalidArgument("MD detector: sample has " + std::to_string(x.size()) +
                          " entries, model expects " + std::to_string(scaler.mean.size()));
  }
  Vector z = (x - scaler.mean).cwiseQuotient(scaler.std);
  if (variant == MdVariant::md2) return projection.transpose() * z;
  return z;
}

MdDetector fit_md_detector(const Matrix& train, MdVariant variant, const MdConfig& config) {
  MdDetector model;
  model.variant = variant;
  model.input_dim = train.cols();
  model.lags = variant == MdVariant::md3 ? config.lags : 0;
  const Matrix source = variant == MdVariant::md3 ? lag_augment(train, model.lags) : train;
  if (source.rows() < 2) throw InvalidArgument("MD detector: need at least 2 training rows");
  model.scaler = fit_standardize(source);
  Matrix z = apply_standardize(source, model.scaler);
  if (variant == MdVariant::md2) {
    const auto eig = numerics::sym_eig(numerics::covariance(z));
    const Index t = numerics::retained_components(eig.eigenvalues, config.pca_variance);
    model.projection = eig.eigenvectors.leftCols(t);
    z = z * model.projection;
  }
  model.mean = numerics::column_means(z);
  Matrix s = numerics::covariance(z);
  const double m = static_cast<double>(s.rows());
  s.diagonal().array() += config.ridge * s.trace() / m;

  const auto eig = numerics::sym_eig(s);
  const double top = eig.eigenvalues(0);
  if (!(eig.eigenvalues.minCoeff() > 1e-14 * std::max(top, 1.0))) {
    throw NumericalError("MD detector: covariance is singular after regularization");
  }
  Matrix inv = eig.eigenvectors * eig.eigenvalues.cwiseInverse().asDiagonal() *
               eig.eigenvectors.transpose();
  model.inverse_covariance = 0.5 * (inv + inv.transpose());
  return model;
}

double mahalanobis(const MdDetector& model, const Vector& z) {
  if (z.size() != model.mean.size()) throw InvalidArgument("mahalanobis: dimension mismatch");
  const Vector d = z - model.mean;
  return std::sqrt(std::max(0.0, d.dot(model.inverse_covariance * d)));
}

double score_md(const MdDetector& model, const Vector& x) {
  return mahalanobis(model, model.embed(x));
}

Vector score_md_sequence(const MdDetector& model, const Matrix& raw) {
  if (raw.cols() != model.input_dim) {
    throw InvalidArgument("MD detector: data has " + std::to_string(raw.cols()) +
                          " columns, model expects " + std::to_string(model.input_dim));
  }
  Matrix z = apply_standardize(lag_augment_aligned(raw, model.lags), model.scaler);
  if (model.variant == MdVariant::md2) z = z * model.projection;
  const Matrix centered = z.rowwise() - model.mean.transpose();
  const Matrix weighted = centered * model.inverse_covariance;
  return centered.cwiseProduct(weighted).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
}

// ---------------------------------------------------------------------------
// Kernel PCA

std::string to_string(KernelType k) {
  switch (k) {
    case KernelType::poly: return "poly";
    case KernelType::rbf: return "rbf";
    case KernelType::cosine: return "cosine";
  }
  return "rbf";
}

KernelType kernel_from_string(const std::string& name) {
  for (auto k : {KernelType::poly, KernelType::rbf, KernelType::cosine}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown kernel: " + name);
}

Matrix kernel_matrix(const KernelParams& params, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("kernel_matrix: dimension mismatch");
  Matrix gram = a * b.transpose();
  switch (params.type) {
    case KernelType::poly:
      return (gram.array() + params.offset).pow(params.degree).matrix();
    case KernelType::rbf: {
      if (!(params.bandwidth > 0.0)) throw InvalidArgument("rbf kernel: bandwidth must be > 0");
      const Vector na = a.rowwise().squaredNorm();
      const Vector nb = b.rowwise().squaredNorm();
      Matrix d2 = (-2.0 * gram).colwise() + na;
      d2.rowwise() += nb.transpose();
      d2 = d2.cwiseMax(0.0);
      const double denom = 2.0 * params.bandwidth * params.bandwidth;
      return (-d2.array() / denom).exp().matrix();
    }
    case KernelType::cosine: {
      const Vector na = a.rowwise().norm();
      const Vector nb = b.rowwise().norm();
      for (Index i = 0; i < gram.rows(); ++i) {
        for (Index j = 0; j < gram.cols(); ++j) {
          const double denom = na(i) * nb(j);
          gram(i, j) = denom > 0.0 ? gram(i, j) / denom : 0.0;
        }
      }
      return gram;
    }
  }
  return gram;
}

Matrix center_kernel(const Matrix& k) {
  const Vector col_means = k.colwise().mean().transpose();
  const Vector row_means = k.rowwise().mean();
  const double all = k.mean();
  Matrix out = k;
  out.colwise() -= row_means;
  out.rowwise() -= col_means.transpose();
  out.array() += all;
  return 0.5 * (out + out.transpose());
}

double median_pairwise_distance(const Matrix& data) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(data.rows() * (data.rows() - 1) / 2));
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = i + 1; j < data.rows(); ++j) d.push_back((data.row(i) - data.row(j)).norm());
  }
  if (d.empty()) throw InvalidArgument("median_pairwise_distance: need at least 2 rows");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

KpcaDetector fit_kpca_detector(const Matrix& train, const KpcaConfig& config) {
  if (train.rows() < 2) throw InvalidArgument("KPCA detector: need at least 2 training rows");
  if (config.max_train < 2) throw InvalidArgument("KPCA detector: max_train must be >= 2");
  KpcaDetector model;
  model.kernel = config.kernel;
  model.scaler = fit_standardize(train);
  const Matrix z = apply_standardize(train, model.scaler);

  Index n = std::min<Index>(train.rows(), config.max_train);
  if (n == train.rows()) {
    model.train = z;
  } else {
    // Evenly thinned reference set.
    model.train.resize(n, z.cols());
    for (Index i = 0; i < n; ++i) {
      const Index src = (i * (z.rows() - 1)) / (n - 1);
      model.train.row(i) = z.row(src);
    }
  }
  if (model.kernel.type == KernelType::rbf && !(model.kernel.bandwidth > 0.0)) {
    model.kernel.bandwidth = median_pairwise_distance(model.train);
    if (!(model.kernel.bandwidth > 0.0)) {
      throw NumericalError("KPCA detector: all training rows coincide");
    }
  }

  const Matrix k = kernel_matrix(model.kernel, model.train, model.train);
  model.kernel_col_means = k.colwise().mean().transpose();
  model.kernel_mean = k.mean();
  const auto eig = numerics::sym_eig(center_kernel(k));
  const double top = std::max(eig.eigenvalues(0), 0.0);
  if (eig.eigenvalues.minCoeff() < -1e-8 * std::max(top, 1.0)) {
    throw NumericalError("KPCA detector: centered kernel matrix is not positive semi-definite");
  }
  const Index t = numerics::retained_components(eig.eigenvalues, config.variance_fraction);
  model.eigenvalues = eig.eigenvalues.head(t);
  model.alphas = eig.eigenvectors.leftCols(t) *
                 model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  return model;
}

namespace {

Vector kpca_t2(const KpcaDetector& model, const Matrix& z) {
  Matrix kt = kernel_matrix(model.kernel, z, model.train);  // rows: samples
  const Vector row_means = kt.rowwise().mean();
  kt.colwise() -= row_means;
  kt.rowwise() -= model.kernel_col_means.transpose();
  kt.array() += model.kernel_mean;
  const Matrix scores = kt * model.alphas;
  const double dof = static_cast<double>(model.train.rows() - 1);
  return scores.cwiseAbs2() * (dof * model.eigenvalues.cwiseInverse());
}

}  // namespace

double score_kpca(const KpcaDetector& model, const Vector& x) {
  if (x.size() != model.scaler.mean.size()) throw InvalidArgument("KPCA: dimension mismatch");
  const Matrix z = ((x - model.scaler.mean).cwiseQuotient(model.scaler.std)).transpose();
  return kpca_t2(model, z)(0);
}

Vector score_kpca_sequence(const KpcaDetector& model, const Matrix& raw) {
  return kpca_t2(model, apply_standardize(raw, model.scaler));
}

// ---------------------------------------------------------------------------

double detector_control_limit(std::span<const double> train_scores, double confidence) {
  return numerics::empirical_quantile(train_scores, confidence);
}

// ---------------------------------------------------------------------------
// Bank

Index DetectorBank::k() const {
  Index total = 0;
  for (const auto& e : entries) total += static_cast<Index>(e.feature_names.size());
  return total;
}

std::vector<std::string> DetectorBank::feature_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.insert(out.end(), e.feature_names.begin(), e.feature_names.end());
  return out;
}

BankEntry fit_detector(const std::string& kind, const Matrix& train, const BankConfig& config) {
  BankEntry entry;
  entry.kind = kind;
  if (kind == "pca") {
    entry.detector = fit_pca_detector(train, config.pca_variance);
    entry.feature_names = {"pca_t2", "pca_q"};
  } else if (kind == "dpca") {
    entry.detector = fit_dpca_detector(train, config.dpca_lags, config.pca_variance);
    entry.feature_names = {"dpca_t2", "dpca_q"};
  } else if (kind == "md1" || kind == "md2" || kind == "md3") {
    const auto variant = kind == "md1" ? MdVariant::md1
                         : kind == "md2" ? MdVariant::md2
                                         : MdVariant::md3;
    entry.detector = fit_md_detector(train, variant, config.md);
    entry.feature_names = {kind};
  } else if (kind.rfind("kpca_", 0) == 0) {
    KpcaConfig kc = config.kpca;
    kc.kernel.type = kernel_from_string(kind.substr(5));
    entry.detector = fit_kpca_detector(train, kc);
    entry.feature_names = {kind};
  } else {
    throw InvalidArgument("unknown detector kind: " + kind);
  }
  return entry;
}

DetectorBank fit_bank(const Matrix& train, const BankConfig& config) {
  if (config.detectors.empty()) throw InvalidArgument("detector bank is empty");
  DetectorBank bank;
  bank.input_dim = train.cols();
  for (const auto& kind : config.detectors) bank.entries.push_back(fit_detector(kind, train, config));
  return bank;
}

Matrix score_entry(const BankEntry& entry, const Matrix& raw) {
  return std::visit(
      [&](const auto& d) -> Matrix {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PcaDetector>) {
          return score_pca_sequence(d, raw);
        } else if constexpr (std::is_same_v<T, MdDetector>) {
          return score_md_sequence(d, raw);
        } else {
          return score_kpca_sequence(d, raw);
        }
      },
      entry.detector);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

enum : std::uint8_t { kTagPca = 1, kTagMd = 2, kTagKpca = 3 };

void write_scaler(io::ByteWriter& out, const ScalerStats& s) {
  out.vec(s.mean);
  out.vec(s.std);
}

ScalerStats read_scaler(io::ByteReader& in) {
  ScalerStats s;
  s.mean = in.vec();
  s.std = in.vec();
  return s;
}

}  // namespace

void write_bank(io::ByteWriter& out, const DetectorBank& bank) {
  out.i64(bank.input_dim);
  out.u64(bank.entries.size());
  for (const auto& e : bank.entries) {
    out.str(e.kind);
    out.u64(e.feature_names.size());
    for (const auto& f : e.feature_names) out.str(f);
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PcaDetector>) {
            out.u8(kTagPca);
            write_scaler(out, d.scaler);
            out.mat(d.loadings);
            out.vec(d.retained_eigenvalues);
            out.i64(d.lags);
            out.i64(d.input_dim);
          } else if constexpr (std::is_same_v<T, MdDetector>) {
            out.u8(kTagMd);
            out.u8(static_cast<std::uint8_t>(d.variant));
            write_scaler(out, d.scaler);
            out.mat(d.projection);
            out.i64(d.lags);
            out.i64(d.input_dim);
            out.vec(d.mean);
            out.mat(d.inverse_covariance);
          } else {
            out.u8(kTagKpca);
            out.u8(static_cast<std::uint8_t>(d.kernel.type));
            out.i64(d.kernel.degree);
            out.f64(d.kernel.offset);
            out.f64(d.kernel.bandwidth);
            write_scaler(out, d.scaler);
            out.mat(d.train);
            out.vec(d.kernel_col_means);
            out.f64(d.kernel_mean);
            out.mat(d.alphas);
            out.vec(d.eigenvalues);
          }
        },
        e.detector);
  }
}

DetectorBank read_bank(io::ByteReader& in) {
  DetectorBank bank;
  bank.input_dim = in.i64();
  const auto count = in.u64();
  if (count > 1024) throw FormatError("detector bank: implausible entry count");
  for (std::uint64_t i = 0; i < count; ++i) {
    BankEntry e;
    e.kind = in.str();
    const auto nf = in.u64();
    if (nf > 1024) throw FormatError("detector bank: implausible feature count");
    for (std::uint64_t f = 0; f < nf; ++f) e.feature_names.push_back(in.str());
    const auto tag = in.u8();
    if (tag == kTagPca) {
      PcaDetector d;
      d.scaler = read_scaler(in);
      d.loadings = in.mat();
      d.retained_eigenvalues = in.vec();
      d.lags = in.i64();
      d.input_dim = in.i64();
      e.detector = std::move(d);
    } else if (tag == kTagMd) {
      MdDetector d;
      const auto v = in.u8();
      if (v > 2) throw FormatError("detector bank: bad MD variant");
      d.variant = static_cast<MdVariant>(v);
      d.scaler = read_scaler(in);
      d.projection = in.mat();
      d.lags = in.i64();
      d.input_dim = in.i64();
      d.mean = in.vec();
      d.inverse_covariance = in.mat();
      e.detector = std::move(d);
    } else if (tag == kTagKpca) {
      KpcaDetector d;
      const auto k = in.u8();
      if (k > 2) throw FormatError("detector bank: bad kernel type");
      d.kernel.type = static_cast<KernelType>(k);
      d.kernel.degree = static_cast<int>(in.i64());
      d.kernel.offset = in.f64();
      d.kernel.bandwidth = in.f64();
      d.scaler = read_scaler(in);
      d.train = in.mat();
      d.kernel_col_means = in.vec();
      d.kernel_mean = in.f64();
      d.alphas = in.mat();
      d.eigenvalues = in.vec();
      e.detector = std::move(d);
    } else {
      throw FormatError("detector bank: unknown detector tag");
    }
    bank.entries.push_back(std::move(e));
  }
  return bank;
}

}  // namespace aefenet::detectors
