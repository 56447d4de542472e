#include "aefenet/ensemble.hpp"

namespace aefenet {

void FeatureMatrix::validate() const {
  if (static_cast<Index>(feature_names.size()) != values.cols()) {
    throw InvalidArgument("feature matrix: name count does not match column count");
  }
  if (!values.allFinite()) {
    throw NumericalError("feature matrix (layer " + std::to_string(layer) + "): non-finite entry");
  }
}

FeatureMatrix build_feature_matrix(const detectors::DetectorBank& bank, const Matrix& data) {
  if (!bank.fitted()) throw InvalidArgument("build_feature_matrix: detector bank is not fitted");
  if (data.cols() != bank.input_dim) {
    throw InvalidArgument("build_feature_matrix: data has " + std::to_string(data.cols()) +
                          " columns, bank was fitted on " + std::to_string(bank.input_dim));
  }
  FeatureMatrix u;
  u.values.resize(data.rows(), bank.k());
  Index col = 0;
  for (const auto& entry : bank.entries) {
    const Matrix scores = detectors::score_entry(entry, data);
    u.values.middleCols(col, scores.cols()) = scores;
    col += scores.cols();
  }
  u.feature_names = bank.feature_names();
  u.validate();
  return u;
}

FeatureMatrix build_feature_matrix(const detectors::DetectorBank& bank,
                                   const ProcessDataset& data) {
  return build_feature_matrix(bank, data.values);
}

FeatureMatrix build_crossfit_feature_matrix(const detectors::DetectorBank& bank,
                                            const Matrix& train,
                                            const detectors::BankConfig& config, Index folds) {
  if (folds < 2) return build_feature_matrix(bank, train);
  const Index n = train.rows();
  if (folds > n / 2) throw InvalidArgument("crossfit: too many folds for " + std::to_string(n) + " rows");
  FeatureMatrix u;
  u.values.resize(n, bank.k());
  u.feature_names = bank.feature_names();
  for (Index f = 0; f < folds; ++f) {
    const Index begin = n * f / folds;
    const Index end = n * (f + 1) / folds;
    Matrix rest(n - (end - begin), train.cols());
    rest << train.topRows(begin), train.bottomRows(n - end);
    const auto fold_bank = detectors::fit_bank(rest, config);
    // Score the whole sequence so lagged detectors see real history at the fold edge.
    const FeatureMatrix scored = build_feature_matrix(fold_bank, train);
    u.values.middleRows(begin, end - begin) = scored.values.middleRows(begin, end - begin);
  }
  u.validate();
  return u;
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& u) {
  write_csv(path, u.values, u.feature_names);
}

}  // namespace aefenet
