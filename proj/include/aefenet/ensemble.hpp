#pragma once

#include "aefenet/common.hpp"
#include "aefenet/datasets.hpp"
#include "aefenet/detectors.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace aefenet {

/// Feature layer U^l: one row per (surviving) sample, one column per feature.
/// Row 0 corresponds to original sample `sample_offset`.
struct FeatureMatrix {
  Matrix values;
  int layer = 0;
  std::vector<std::string> feature_names;
  Index sample_offset = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  void validate() const;
};

/// Input feature layer: row i is [f_1(x_i), ..., f_k(x_i)] over the bank.
FeatureMatrix build_feature_matrix(const detectors::DetectorBank& bank, const Matrix& data);
FeatureMatrix build_feature_matrix(const detectors::DetectorBank& bank,
                                   const ProcessDataset& data);

/// Training-time feature layer scored out of fold: the rows are split into
/// `folds` contiguous blocks and each block is scored by a bank fitted on
/// the remaining rows. folds < 2 scores in-sample with `bank`.
FeatureMatrix build_crossfit_feature_matrix(const detectors::DetectorBank& bank,
                                            const Matrix& train,
                                            const detectors::BankConfig& config, Index folds);

/// Debug dump: header of feature names, one row per sample.
void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& u);

}  // namespace aefenet
