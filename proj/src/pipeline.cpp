#include "aefenet/pipeline.hpp"

#include "aefenet/ensemble.hpp"
#include "aefenet/metrics.hpp"
#include "aefenet/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace aefenet {

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::validate() const {
  if (l_max < 0) throw InvalidArgument("l_max must be non-negative");
  if (!layers.empty() && static_cast<Index>(layers.size()) != l_max) {
    throw InvalidArgument("explicit layer list has " + std::to_string(layers.size()) +
                          " entries, l_max is " + std::to_string(l_max));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidArgument("confidence must lie in (0, 1)");
  }
  if (!(norm_p >= 1.0)) throw InvalidArgument("norm order p must be >= 1");
  if (crossfit_folds < 0 || crossfit_folds == 1) {
    throw InvalidArgument("crossfit_folds must be 0 or at least 2");
  }
  if (bank.detectors.empty()) throw InvalidArgument("detector bank is empty");
  for (Index l = 0; l < l_max; ++l) {
    const auto c = layer_config(l);
    if (c.window < 2 || c.subset_size < 1 || c.max_subsets < 1 || c.code_dim < 1) {
      throw InvalidArgument("layer " + std::to_string(l) + ": invalid sizes");
    }
    if (!(c.pca_variance > 0.0 && c.pca_variance <= 1.0)) {
      throw InvalidArgument("layer " + std::to_string(l) + ": pca_variance must lie in (0, 1]");
    }
    if (c.training.epochs < 0 || !(c.training.learning_rate > 0.0)) {
      throw InvalidArgument("layer " + std::to_string(l) + ": invalid training settings");
    }
  }
}

transform::LayerConfig PipelineConfig::layer_config(Index l) const {
  transform::LayerConfig c =
      layers.empty() ? layer_template : layers.at(static_cast<std::size_t>(l));
  c.seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(l));
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<Index>& v) {
  std::vector<std::string> items;
  for (auto x : v) items.push_back(std::to_string(x));
  return ini::join(items);
}

transform::LayerConfig read_layer_section(const ini::Tree& tree, const std::string& s,
                                          transform::LayerConfig c) {
  c.window = ini::get_int(tree, s + ".window", c.window);
  c.subset_size = ini::get_int(tree, s + ".subset_size", c.subset_size);
  c.max_subsets = ini::get_int(tree, s + ".max_subsets", c.max_subsets);
  c.pca_variance = ini::get_double(tree, s + ".pca_variance", c.pca_variance);
  c.code_dim = ini::get_int(tree, s + ".code_dim", c.code_dim);
  std::vector<long long> hidden(c.hidden.begin(), c.hidden.end());
  hidden = ini::get_int_list(tree, s + ".hidden", hidden);
  c.hidden.assign(hidden.begin(), hidden.end());
  c.variant = ae::variant_from_string(ini::get_string(tree, s + ".variant", to_string(c.variant)));
  c.sparse.target = ini::get_double(tree, s + ".sparsity_target", c.sparse.target);
  c.sparse.weight = ini::get_double(tree, s + ".sparsity_weight", c.sparse.weight);
  auto& t = c.training;
  t.epochs = ini::get_int(tree, s + ".epochs", t.epochs);
  t.learning_rate = ini::get_double(tree, s + ".learning_rate", t.learning_rate);
  t.l1_weight = ini::get_double(tree, s + ".l1_weight", t.l1_weight);
  t.kl_weight = ini::get_double(tree, s + ".kl_weight", t.kl_weight);
  t.beta1 = ini::get_double(tree, s + ".beta1", t.beta1);
  t.beta2 = ini::get_double(tree, s + ".beta2", t.beta2);
  t.adam_epsilon = ini::get_double(tree, s + ".adam_epsilon", t.adam_epsilon);
  return c;
}

void write_layer_section(std::ostream& out, const std::string& name,
                         const transform::LayerConfig& c) {
  out << "[" << name << "]\n"
      << "window = " << c.window << "\n"
      << "subset_size = " << c.subset_size << "\n"
      << "max_subsets = " << c.max_subsets << "\n"
      << "pca_variance = " << fmt(c.pca_variance) << "\n"
      << "code_dim = " << c.code_dim << "\n"
      << "hidden = " << fmt_list(c.hidden) << "\n"
      << "variant = " << to_string(c.variant) << "\n"
      << "sparsity_target = " << fmt(c.sparse.target) << "\n"
      << "sparsity_weight = " << fmt(c.sparse.weight) << "\n"
      << "epochs = " << c.training.epochs << "\n"
      << "learning_rate = " << fmt(c.training.learning_rate) << "\n"
      << "l1_weight = " << fmt(c.training.l1_weight) << "\n"
      << "kl_weight = " << fmt(c.training.kl_weight) << "\n"
      << "beta1 = " << fmt(c.training.beta1) << "\n"
      << "beta2 = " << fmt(c.training.beta2) << "\n"
      << "adam_epsilon = " << fmt(c.training.adam_epsilon) << "\n";
}

}  // namespace

PipelineConfig pipeline_config_from_ini(const ini::Tree& tree) {
  static const std::set<std::string> kKnownSections = {"pipeline", "detectors", "layer"};
  PipelineConfig c;
  c.l_max = ini::get_int(tree, "pipeline.l_max", c.l_max);
  c.confidence = ini::get_double(tree, "pipeline.confidence", c.confidence);
  c.norm_p = ini::get_double(tree, "pipeline.norm_p", c.norm_p);
  c.seed = ini::get_u64(tree, "pipeline.seed", c.seed);
  c.crossfit_folds = ini::get_int(tree, "pipeline.crossfit_folds", c.crossfit_folds);

  auto& b = c.bank;
  if (auto bank = ini::get_string(tree, "detectors.bank")) b.detectors = ini::split_list(*bank);
  b.pca_variance = ini::get_double(tree, "detectors.pca_variance", b.pca_variance);
  b.dpca_lags = ini::get_int(tree, "detectors.dpca_lags", b.dpca_lags);
  b.md.pca_variance = ini::get_double(tree, "detectors.md2_variance", b.md.pca_variance);
  b.md.lags = ini::get_int(tree, "detectors.md3_lags", b.md.lags);
  b.md.ridge = ini::get_double(tree, "detectors.md_ridge", b.md.ridge);
  b.kpca.variance_fraction = ini::get_double(tree, "detectors.kpca_variance",
                                             b.kpca.variance_fraction);
  b.kpca.max_train = ini::get_int(tree, "detectors.kpca_max_train", b.kpca.max_train);
  b.kpca.kernel.degree =
      static_cast<int>(ini::get_int(tree, "detectors.kpca_poly_degree", b.kpca.kernel.degree));
  b.kpca.kernel.offset = ini::get_double(tree, "detectors.kpca_poly_offset", b.kpca.kernel.offset);
  b.kpca.kernel.bandwidth =
      ini::get_double(tree, "detectors.kpca_rbf_bandwidth", b.kpca.kernel.bandwidth);

  c.layer_template = read_layer_section(tree, "layer", c.layer_template);

  bool explicit_layers = false;
  for (const auto& [section, _] : tree) {
    if (kKnownSections.count(section)) continue;
    if (section.rfind("layer", 0) == 0) {
      explicit_layers = true;
      continue;
    }
    throw ParseError("config: unknown section [" + section + "]");
  }
  if (explicit_layers) {
    for (Index l = 0; l < c.l_max; ++l) {
      c.layers.push_back(read_layer_section(tree, "layer" + std::to_string(l), c.layer_template));
    }
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_ini(ini::read_file(path));
}

PipelineConfig pipeline_config_from_text(const std::string& text) {
  return pipeline_config_from_ini(ini::parse(text));
}

std::string pipeline_config_to_text(const PipelineConfig& c) {
  std::ostringstream out;
  out << "[pipeline]\n"
      << "l_max = " << c.l_max << "\n"
      << "confidence = " << fmt(c.confidence) << "\n"
      << "norm_p = " << fmt(c.norm_p) << "\n"
      << "crossfit_folds = " << c.crossfit_folds << "\n"
      << "seed = " << c.seed << "\n\n";
  const auto& b = c.bank;
  out << "[detectors]\n"
      << "bank = " << ini::join(b.detectors) << "\n"
      << "pca_variance = " << fmt(b.pca_variance) << "\n"
      << "dpca_lags = " << b.dpca_lags << "\n"
      << "md2_variance = " << fmt(b.md.pca_variance) << "\n"
      << "md3_lags = " << b.md.lags << "\n"
      << "md_ridge = " << fmt(b.md.ridge) << "\n"
      << "kpca_variance = " << fmt(b.kpca.variance_fraction) << "\n"
      << "kpca_max_train = " << b.kpca.max_train << "\n"
      << "kpca_poly_degree = " << b.kpca.kernel.degree << "\n"
      << "kpca_poly_offset = " << fmt(b.kpca.kernel.offset) << "\n"
      << "kpca_rbf_bandwidth = " << fmt(b.kpca.kernel.bandwidth) << "\n\n";
  write_layer_section(out, "layer", c.layer_template);
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    out << "\n";
    write_layer_section(out, "layer" + std::to_string(l), c.layers[l]);
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Fit / detect

Index FenetModel::valid_from() const {
  Index offset = 0;
  for (const auto& l : layers) offset += l.config.window - 1;
  return offset;
}

namespace {

void check_training_data(const ProcessDataset& train, const PipelineConfig& config, Index depth) {
  train.validate();
  if (!train.all_normal()) throw InvalidArgument("training data must contain only normal samples");
  Index required = 2;
  if (depth > 0) {
    Index consumed = 0;
    for (Index l = 0; l < depth; ++l) consumed += config.layer_config(l).window - 1;
    required = consumed + config.layer_config(depth - 1).window + 1;
  }
  if (train.rows() < required) {
    throw InvalidArgument("training data has " + std::to_string(train.rows()) +
                          " rows; depth " + std::to_string(depth) + " needs at least " +
                          std::to_string(required));
  }
}

}  // namespace

std::vector<FitResult> fit_depths(const ProcessDataset& train, const PipelineConfig& config,
                                  std::span<const Index> depths) {
  if (depths.empty()) throw InvalidArgument("fit_depths: no depths requested");
  const Index max_depth = *std::max_element(depths.begin(), depths.end());
  if (*std::min_element(depths.begin(), depths.end()) < 0) {
    throw InvalidArgument("fit_depths: negative depth");
  }
  PipelineConfig deep = config;
  if (!deep.layers.empty() && static_cast<Index>(deep.layers.size()) < max_depth) {
    throw InvalidArgument("fit_depths: explicit layer list shorter than requested depth");
  }
  deep.l_max = max_depth;
  if (!deep.layers.empty()) deep.layers.resize(static_cast<std::size_t>(max_depth));
  deep.validate();
  check_training_data(train, deep, max_depth);

  detectors::DetectorBank bank = detectors::fit_bank(train.values, deep.bank);
  std::vector<FeatureMatrix> features{
      build_crossfit_feature_matrix(bank, train.values, deep.bank, deep.crossfit_folds)};
  std::vector<transform::TransformLayer> layers;
  std::vector<std::vector<double>> histories;
  for (Index l = 0; l < max_depth; ++l) {
    transform::LayerFit lf;
    try {
      lf = transform::fit_layer(features.back(), deep.layer_config(l));
    } catch (const Error& e) {
      throw NumericalError("transform layer " + std::to_string(l) + ": " + e.what());
    }
    layers.push_back(std::move(lf.layer));
    histories.push_back(std::move(lf.loss_history));
    features.push_back(std::move(lf.output));
  }

  std::vector<FitResult> out;
  for (Index depth : depths) {
    FitResult r;
    r.model.config = config;
    r.model.config.l_max = depth;
    if (!config.layers.empty()) r.model.config.layers.resize(static_cast<std::size_t>(depth));
    r.model.bank = bank;
    r.model.layers.assign(layers.begin(), layers.begin() + depth);
    const auto& u = features[static_cast<std::size_t>(depth)];
    r.model.decision = decision::fit_decision(u.values, config.confidence, config.norm_p);
    r.loss_histories.assign(histories.begin(), histories.begin() + depth);
    r.decision_rows = u.rows();
    out.push_back(std::move(r));
  }
  return out;
}

FitResult fit_with_history(const ProcessDataset& train, const PipelineConfig& config) {
  config.validate();
  const Index depth = config.l_max;
  auto results = fit_depths(train, config, std::span<const Index>(&depth, 1));
  return std::move(results.front());
}

FenetModel fit(const ProcessDataset& train, const PipelineConfig& config) {
  return fit_with_history(train, config).model;
}

DetectionResult detect(const FenetModel& model, const ProcessDataset& test) {
  test.validate();
  if (test.cols() != model.input_dim()) {
    throw InvalidArgument("test data has " + std::to_string(test.cols()) +
                          " columns, model was fitted on " + std::to_string(model.input_dim()));
  }
  FeatureMatrix u = build_feature_matrix(model.bank, test);
  for (const auto& layer : model.layers) u = transform::apply_layer(layer, u);

  DetectionResult r;
  r.d = decision::detection_index(model.decision, u.values);
  r.limit = model.decision.limit;
  r.flags = decision::alarms(model.decision, r.d);
  r.valid_from = u.sample_offset;
  r.labels.assign(test.labels.begin() + r.valid_from, test.labels.end());

  r.summary.excluded = r.valid_from;
  for (int label : r.labels) {
    if (label == kNormalLabel) {
      ++r.summary.normal_samples;
    } else {
      ++r.summary.fault_samples;
    }
  }
  if (r.summary.fault_samples > 0) r.summary.fdr = eval::fdr(r.flags, r.labels);
  if (r.summary.normal_samples > 0) r.summary.far = eval::far(r.flags, r.labels);
  return r;
}

// ---------------------------------------------------------------------------
// Model container: magic, version, payload, trailing CRC-32 of everything before it.

std::string serialize_model(const FenetModel& model) {
  io::ByteWriter out;
  out.raw(std::string_view(kModelMagic, 8));
  out.u32(kModelFormatVersion);
  out.str(pipeline_config_to_text(model.config));
  detectors::write_bank(out, model.bank);
  out.u64(model.layers.size());
  for (const auto& l : model.layers) transform::write_layer(out, l);
  decision::write_decision(out, model.decision);
  std::string bytes = out.bytes();
  io::ByteWriter tail;
  tail.u32(io::crc32(bytes));
  return bytes + tail.bytes();
}

FenetModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 8, kModelMagic, 8) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  io::ByteReader header(std::string_view(bytes).substr(8, 4));
  const auto version = header.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
  }
  const std::string_view body(bytes.data(), bytes.size() - 4);
  io::ByteReader trailer(std::string_view(bytes).substr(bytes.size() - 4));
  if (trailer.u32() != io::crc32(body)) throw FormatError("model file checksum mismatch");

  io::ByteReader in(body.substr(12));
  FenetModel model;
  model.format_version = version;
  try {
    model.config = pipeline_config_from_text(in.str());
  } catch (const Error& e) {
    throw FormatError(std::string("model file: bad config snapshot: ") + e.what());
  }
  model.bank = detectors::read_bank(in);
  const auto n_layers = in.u64();
  if (n_layers > 1024) throw FormatError("model file: implausible layer count");
  for (std::uint64_t i = 0; i < n_layers; ++i) model.layers.push_back(transform::read_layer(in));
  model.decision = decision::read_decision(in);
  if (in.remaining() != 0) throw FormatError("model file: trailing bytes");
  if (static_cast<Index>(model.layers.size()) != model.config.l_max) {
    throw FormatError("model file: layer count does not match config");
  }
  return model;
}

void save(const FenetModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model file: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("write failed: " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

FenetModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace aefenet
