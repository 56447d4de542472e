#pragma once

#include "aefenet/common.hpp"
#include "aefenet/datasets.hpp"
#include "aefenet/decision.hpp"
#include "aefenet/detectors.hpp"
#include "aefenet/ini.hpp"
#include "aefenet/transform.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aefenet {

inline constexpr char kModelMagic[] = "FENETAE1";
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct PipelineConfig {
  detectors::BankConfig bank;
  Index l_max = 2;
  transform::LayerConfig layer_template;
  /// Optional per-layer overrides; when non-empty its length must equal l_max.
  std::vector<transform::LayerConfig> layers;
  double confidence = 0.99;
  double norm_p = 1.0;
  /// Out-of-fold scoring of the training feature layer; 0 scores in-sample.
  Index crossfit_folds = 0;
  std::uint64_t seed = 0;

  void validate() const;
  /// Effective configuration of layer `l`, with its seed derived from `seed`.
  transform::LayerConfig layer_config(Index l) const;
};

PipelineConfig pipeline_config_from_ini(const ini::Tree& tree);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_text(const std::string& text);
/// Canonical text form; parsing it back yields an equal configuration.
std::string pipeline_config_to_text(const PipelineConfig& config);

struct FenetModel {
  PipelineConfig config;
  detectors::DetectorBank bank;
  std::vector<transform::TransformLayer> layers;
  decision::DecisionModel decision;
  std::uint32_t format_version = kModelFormatVersion;

  Index input_dim() const { return bank.input_dim; }
  Index depth() const { return static_cast<Index>(layers.size()); }
  /// Number of leading samples that do not receive a detection index.
  Index valid_from() const;
};

struct RateSummary {
  std::optional<double> fdr;
  std::optional<double> far;
  Index fault_samples = 0;
  Index normal_samples = 0;
  Index excluded = 0;  // leading samples without a full window chain
};

struct DetectionResult {
  Vector d;  // one entry per sample from valid_from on
  double limit = 0.0;
  std::vector<bool> flags;
  Index valid_from = 0;
  std::vector<int> labels;  // labels aligned with d
  RateSummary summary;
};

struct FitResult {
  FenetModel model;
  std::vector<std::vector<double>> loss_histories;  // one per transform layer
  Index decision_rows = 0;
};

FenetModel fit(const ProcessDataset& train, const PipelineConfig& config);
FitResult fit_with_history(const ProcessDataset& train, const PipelineConfig& config);

/// Fits one model per requested depth, sharing the transform layers common
/// to all of them. Each result equals fit() with l_max set to that depth.
std::vector<FitResult> fit_depths(const ProcessDataset& train, const PipelineConfig& config,
                                  std::span<const Index> depths);

DetectionResult detect(const FenetModel& model, const ProcessDataset& test);

std::string serialize_model(const FenetModel& model);
FenetModel deserialize_model(const std::string& bytes);
void save(const FenetModel& model, const std::filesystem::path& path);
FenetModel load(const std::filesystem::path& path);

}  // namespace aefenet
