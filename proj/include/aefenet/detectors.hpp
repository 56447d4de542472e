#pragma once

#include "aefenet/common.hpp"
#include "aefenet/datasets.hpp"
#include "aefenet/serialize.hpp"

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace aefenet::detectors {

/// Stacks [x_t, x_{t-1}, ..., x_{t-lags}] for t = lags .. n-1 (n - lags rows).
Matrix lag_augment(const Matrix& data, Index lags);

/// Like lag_augment but keeps one row per input sample: rows t < lags reuse
/// the earliest complete window (the one at t = lags).
Matrix lag_augment_aligned(const Matrix& data, Index lags);

// ---------------------------------------------------------------------------
// PCA / DPCA

/// PCA monitor producing T^2 and Q. With `lags > 0` it is a DPCA monitor and
/// everything below (scaler, loadings) lives in the lag-augmented space.
struct PcaDetector {
  ScalerStats scaler;
  Matrix loadings;           // (m * (lags + 1)) x t, orthonormal columns
  Vector retained_eigenvalues;  // t, descending, > 0
  Index lags = 0;
  Index input_dim = 0;  // columns of the raw (non-augmented) data

  Index retained() const { return loadings.cols(); }
};

struct PcaScore {
  double t2 = 0.0;
  double q = 0.0;
};

PcaDetector fit_pca_detector(const Matrix& train, double variance_fraction);
PcaDetector fit_dpca_detector(const Matrix& train, Index lags, double variance_fraction);

/// Scores one (already lag-augmented, when lags > 0) raw sample vector.
PcaScore score_pca(const PcaDetector& model, const Vector& x);

/// Scores a raw sequence; returns n x 2 with columns (T^2, Q).
Matrix score_pca_sequence(const PcaDetector& model, const Matrix& raw);

// ---------------------------------------------------------------------------
// Mahalanobis distance

enum class MdVariant { md1, md2, md3 };

std::string to_string(MdVariant v);

struct MdConfig {
  double pca_variance = 0.95;  // MD2 subspace
  Index lags = 1;              // MD3 augmentation
  double ridge = 1e-6;         // S + ridge * trace(S)/m * I
};

struct MdDetector {
  MdVariant variant = MdVariant::md1;
  ScalerStats scaler;  // lives in the lag-augmented space for MD3
  Matrix projection;   // MD2 only: standardized space -> PCA scores
  Index lags = 0;
  Index input_dim = 0;
  Vector mean;
  Matrix inverse_covariance;

  /// Maps a (lag-augmented, for MD3) raw vector into the space the distance is taken in.
  Vector embed(const Vector& x) const;
};

MdDetector fit_md_detector(const Matrix& train, MdVariant variant, const MdConfig& config = {});

/// Distance of a vector already embedded by MdDetector::embed.
double mahalanobis(const MdDetector& model, const Vector& z);

/// Distance of one raw sample (lag-augmented for MD3).
double score_md(const MdDetector& model, const Vector& x);

Vector score_md_sequence(const MdDetector& model, const Matrix& raw);

// ---------------------------------------------------------------------------
// Kernel PCA (baseline only)

enum class KernelType { poly, rbf, cosine };

std::string to_string(KernelType k);
KernelType kernel_from_string(const std::string& name);

struct KernelParams {
  KernelType type = KernelType::rbf;
  int degree = 3;
  double offset = 1.0;
  double bandwidth = 0.0;  // rbf; <= 0 selects the median pairwise distance
};

/// K(i, j) = k(a_i, b_j).
Matrix kernel_matrix(const KernelParams& params, const Matrix& a, const Matrix& b);

/// Double centering: K - 1K - K1 + 1K1 with 1 = ones/n.
Matrix center_kernel(const Matrix& k);

double median_pairwise_distance(const Matrix& data);

struct KpcaConfig {
  KernelParams kernel;
  double variance_fraction = 0.95;
  Index max_train = 500;  // kernel matrix is n x n; longer inputs are thinned
};

struct KpcaDetector {
  KernelParams kernel;
  ScalerStats scaler;
  Matrix train;            // standardized reference rows
  Vector kernel_col_means; // column means of the uncentered training kernel
  double kernel_mean = 0.0;
  Matrix alphas;           // n x t, scaled so training scores have variance lambda/(n-1)
  Vector eigenvalues;      // t eigenvalues of the centered kernel
};

KpcaDetector fit_kpca_detector(const Matrix& train, const KpcaConfig& config);
double score_kpca(const KpcaDetector& model, const Vector& x);
Vector score_kpca_sequence(const KpcaDetector& model, const Matrix& raw);

// ---------------------------------------------------------------------------
// Control limit

/// Order-statistic control limit of training scores at `confidence`.
double detector_control_limit(std::span<const double> train_scores, double confidence);

// ---------------------------------------------------------------------------
// Detector bank

struct BankConfig {
  /// Detector kinds in order: pca, dpca, md1, md2, md3, kpca_poly, kpca_rbf, kpca_cosine.
  std::vector<std::string> detectors = {"pca", "dpca", "md1", "md2", "md3"};
  double pca_variance = 0.90;
  Index dpca_lags = 2;
  MdConfig md;
  KpcaConfig kpca;
};

using AnyDetector = std::variant<PcaDetector, MdDetector, KpcaDetector>;

struct BankEntry {
  std::string kind;
  AnyDetector detector;
  std::vector<std::string> feature_names;
};

struct DetectorBank {
  std::vector<BankEntry> entries;
  Index input_dim = 0;

  Index k() const;
  std::vector<std::string> feature_names() const;
  bool fitted() const { return !entries.empty(); }
};

BankEntry fit_detector(const std::string& kind, const Matrix& train, const BankConfig& config);
DetectorBank fit_bank(const Matrix& train, const BankConfig& config = {});

/// n x features score matrix of a single bank entry.
Matrix score_entry(const BankEntry& entry, const Matrix& raw);

void write_bank(io::ByteWriter& out, const DetectorBank& bank);
DetectorBank read_bank(io::ByteReader& in);

}  // namespace aefenet::detectors
