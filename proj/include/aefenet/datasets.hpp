#pragma once

#include "aefenet/common.hpp"
#include "aefenet/ini.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aefenet {

/// Label value for a normal sample; fault samples carry their positive fault id.
inline constexpr int kNormalLabel = 0;

/// Samples x variables matrix with per-row labels.
///
/// Rows [0, train_rows) form the training phase when a dataset carries both
/// phases (as produced by the synthetic generator); `train_rows == 0` means
/// the whole dataset is a single phase.
struct ProcessDataset {
  Matrix values;
  std::vector<int> labels;
  double sample_interval_minutes = 3.0;
  std::string name;
  Index train_rows = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  /// Throws InvalidArgument if any invariant is violated.
  void validate() const;

  ProcessDataset slice_rows(Index begin, Index end) const;
  ProcessDataset train_phase() const;
  ProcessDataset test_phase() const;

  /// Marks rows [onset, rows()) as fault `fault_id`.
  void label_fault_from(Index onset, int fault_id = 1);
  bool all_normal() const;
};

struct ScalerStats {
  Vector mean;
  Vector std;
};

ScalerStats fit_standardize(const Matrix& train);
ScalerStats fit_standardize(const ProcessDataset& train);
Matrix apply_standardize(const Matrix& data, const ScalerStats& stats);
ProcessDataset apply_standardize(const ProcessDataset& data, const ScalerStats& stats);

/// Parses comma-separated numeric text, one row per sampling instant.
ProcessDataset load_csv(const std::filesystem::path& path, bool has_header);
ProcessDataset parse_csv(const std::string& text, bool has_header, const std::string& name = {});

/// Writes values with full round-trip precision. `header` may be empty.
void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header = {});

enum class FaultType { none, step, random_variation, slow_drift, sticking };

std::string to_string(FaultType type);
FaultType fault_type_from_string(const std::string& name);

struct SyntheticConfig {
  Index n_variables = 10;
  Index n_train = 2000;
  Index n_test = 2000;
  FaultType fault_type = FaultType::none;
  double fault_amplitude = 0.0;  // in channel standard deviations
  std::vector<Index> fault_channels;
  Index fault_onset = 0;  // row within the test phase
  std::uint64_t seed = 0;

  void validate() const;
};

/// Default coupling matrix: tridiagonal (0.8 diagonal, 0.1 off-diagonal),
/// rescaled to spectral radius 0.95.
Matrix default_coupling_matrix(Index n_variables);

/// Coupled linear-Gaussian process x_t = A x_{t-1} + w_t with an optional
/// fault injected into the test phase. Returns both phases in one dataset
/// (`train_rows == n_train`); test-phase labels mark the fault onset.
ProcessDataset generate_synthetic(const SyntheticConfig& config);

/// Key-value metadata text recording the config and seed.
std::string synthetic_metadata(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_ini(const std::filesystem::path& path);
SyntheticConfig synthetic_config_from_ini_text(const std::string& text);
/// Reads the synthetic keys from `section` of an already parsed tree.
SyntheticConfig synthetic_config_from_tree(const ini::Tree& tree,
                                           const std::string& section = "synthetic");

}  // namespace aefenet
