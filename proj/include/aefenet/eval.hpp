#pragma once

#include "aefenet/datasets.hpp"
#include "aefenet/metrics.hpp"
#include "aefenet/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aefenet::eval {

/// One dataset of an experiment grid: either a synthetic scenario or a pair
/// of exported train/test files with a fault onset row in the test file.
struct DataSource {
  std::string name;
  int fault_id = 1;
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  Index onset = 0;
  bool has_header = false;
};

/// Methods: "aefenet" (variant from the layer config), "aefenet-plain",
/// "aefenet-sparse", "aefenet-variational", or a single base detector
/// feature used as a baseline (pca_t2, pca_q, dpca_t2, dpca_q, md1, md2,
/// md3, kpca_poly, kpca_rbf, kpca_cosine).
struct ExperimentGrid {
  std::vector<std::string> methods;
  std::vector<Index> depths = {0, 1, 2};
  std::vector<DataSource> sources;
  PipelineConfig pipeline;

  void validate() const;
  /// Canonical text; its checksum names the report files.
  std::string canonical_text() const;
  std::string config_hash() const;
};

ExperimentGrid load_grid(const std::filesystem::path& path);
ExperimentGrid grid_from_text(const std::string& text, const std::filesystem::path& base_dir = {});

bool is_baseline(const std::string& method);

/// depth == -1 for baselines (no transform layers). metric is "fdr" or "far".
struct ReportCell {
  std::string dataset;  // "normal" for the pooled FAR row
  int fault_id = 0;
  std::string method;
  Index depth = -1;
  std::string metric;
  std::optional<double> value;
  Index samples = 0;
  Index excluded = 0;
  std::string error;
};

struct ExperimentReport {
  std::vector<ReportCell> cells;
  std::string config_hash;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;

  std::vector<const ReportCell*> fdr_cells() const;
  std::vector<const ReportCell*> far_cells() const;
  const ReportCell* find(const std::string& dataset, const std::string& method, Index depth,
                         const std::string& metric) const;
};

struct SourceData {
  ProcessDataset train;
  ProcessDataset test;
};

SourceData resolve_source(const DataSource& source);

ExperimentReport run_experiment(const ExperimentGrid& grid);

/// Machine-readable form (deterministic; no timing information).
std::string report_csv(const ExperimentReport& report);
ExperimentReport parse_report_csv(const std::string& text);
/// Aligned text table: rows are the FAR row then one row per dataset,
/// columns are (method, depth) pairs.
std::string report_table(const ExperimentReport& report);
std::string report_hash(const ExperimentReport& report);

/// Writes report_<config hash>.txt and .csv into `dir`; returns the csv path.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace aefenet::eval
