#include "aefenet/datasets.hpp"

#include "aefenet/ini.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace aefenet {

// ---------------------------------------------------------------------------
// ProcessDataset

void ProcessDataset::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw InvalidArgument("dataset '" + name + "' is empty");
  }
  if (static_cast<Index>(labels.size()) != values.rows()) {
    throw InvalidArgument("dataset '" + name + "': label count does not match row count");
  }
  if (!values.allFinite()) throw InvalidArgument("dataset '" + name + "': non-finite value");
  if (train_rows < 0 || train_rows > values.rows()) {
    throw InvalidArgument("dataset '" + name + "': train_rows out of range");
  }
}

ProcessDataset ProcessDataset::slice_rows(Index begin, Index end) const {
  if (begin < 0 || end > rows() || begin >= end) {
    throw InvalidArgument("slice_rows: invalid range");
  }
  ProcessDataset out;
  out.values = values.middleRows(begin, end - begin);
  out.labels.assign(labels.begin() + begin, labels.begin() + end);
  out.sample_interval_minutes = sample_interval_minutes;
  out.name = name;
  return out;
}

ProcessDataset ProcessDataset::train_phase() const {
  if (train_rows == 0) throw InvalidArgument("dataset '" + name + "' has no training phase");
  auto out = slice_rows(0, train_rows);
  out.name = name + ":train";
  return out;
}

ProcessDataset ProcessDataset::test_phase() const {
  if (train_rows == rows()) throw InvalidArgument("dataset '" + name + "' has no test phase");
  auto out = slice_rows(train_rows, rows());
  out.name = name + ":test";
  return out;
}

void ProcessDataset::label_fault_from(Index onset, int fault_id) {
  if (onset < 0 || onset > rows()) throw InvalidArgument("fault onset outside the dataset");
  if (fault_id <= kNormalLabel) throw InvalidArgument("fault id must be positive");
  std::fill(labels.begin() + onset, labels.end(), fault_id);
}

bool ProcessDataset::all_normal() const {
  return std::all_of(labels.begin(), labels.end(), [](int l) { return l == kNormalLabel; });
}

// ---------------------------------------------------------------------------
// Standardization

ScalerStats fit_standardize(const Matrix& train) {
  if (train.rows() < 2) throw InvalidArgument("fit_standardize: need at least 2 rows");
  ScalerStats stats;
  stats.mean = train.colwise().mean().transpose();
  const Matrix centered = train.rowwise() - stats.mean.transpose();
  stats.std = (centered.colwise().squaredNorm() / static_cast<double>(train.rows() - 1))
                  .cwiseSqrt()
                  .transpose();
  stats.std = stats.std.cwiseMax(kStdFloor);
  return stats;
}

ScalerStats fit_standardize(const ProcessDataset& train) { return fit_standardize(train.values); }

Matrix apply_standardize(const Matrix& data, const ScalerStats& stats) {
  if (data.cols() != stats.mean.size() || data.cols() != stats.std.size()) {
    throw InvalidArgument("apply_standardize: column count " + std::to_string(data.cols()) +
                          " does not match stats (" + std::to_string(stats.mean.size()) + ")");
  }
  Matrix out = data.rowwise() - stats.mean.transpose();
  out.array().rowwise() /= stats.std.transpose().array();
  return out;
}

ProcessDataset apply_standardize(const ProcessDataset& data, const ScalerStats& stats) {
  ProcessDataset out = data;
  out.values = apply_standardize(data.values, stats);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

ProcessDataset parse_csv(const std::string& text, bool has_header, const std::string& name) {
  std::vector<double> flat;
  Index cols = -1;
  Index rows = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    Index field_count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      std::string field = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start);
      const auto first = field.find_first_not_of(" \t");
      const auto last = field.find_last_not_of(" \t");
      field = first == std::string::npos ? std::string() : field.substr(first, last - first + 1);
      double value = 0.0;
      const auto* b = field.data();
      const auto* e = field.data() + field.size();
      auto [ptr, ec] = std::from_chars(b, e, value);
      if (field.empty() || ec != std::errc() || ptr != e || !std::isfinite(value)) {
        throw ParseError(name + ": line " + std::to_string(line_no) + ", column " +
                         std::to_string(field_count + 1) + ": not a finite number: '" + field +
                         "'");
      }
      flat.push_back(value);
      ++field_count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols < 0) {
      cols = field_count;
    } else if (field_count != cols) {
      throw ParseError(name + ": ragged row at line " + std::to_string(line_no) + " (" +
                       std::to_string(field_count) + " fields, expected " +
                       std::to_string(cols) + ")");
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(name + ": no data rows");

  ProcessDataset ds;
  ds.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(flat.data(), rows, cols);
  ds.labels.assign(static_cast<std::size_t>(rows), kNormalLabel);
  ds.name = name;
  return ds;
}

ProcessDataset load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open data file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), has_header, path.filename().string());
}

void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out.imbue(std::locale::classic());
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic generator

std::string to_string(FaultType type) {
  switch (type) {
    case FaultType::none: return "none";
    case FaultType::step: return "step";
    case FaultType::random_variation: return "random_variation";
    case FaultType::slow_drift: return "slow_drift";
    case FaultType::sticking: return "sticking";
  }
  return "none";
}

FaultType fault_type_from_string(const std::string& name) {
  for (auto t : {FaultType::none, FaultType::step, FaultType::random_variation,
                 FaultType::slow_drift, FaultType::sticking}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidArgument("unknown fault type: " + name);
}

void SyntheticConfig::validate() const {
  if (n_variables < 1 || n_train < 2 || n_test < 1) {
    throw InvalidArgument("synthetic config: sizes must be positive (n_train >= 2)");
  }
  if (fault_onset < 0 || fault_onset >= n_test) {
    throw InvalidArgument("synthetic config: fault_onset must lie in [0, n_test)");
  }
  for (auto c : fault_channels) {
    if (c < 0 || c >= n_variables) {
      throw InvalidArgument("synthetic config: fault channel " + std::to_string(c) +
                            " out of range");
    }
  }
  if (!std::isfinite(fault_amplitude)) throw InvalidArgument("synthetic config: bad amplitude");
}

Matrix default_coupling_matrix(Index n_variables) {
  Matrix a = Matrix::Zero(n_variables, n_variables);
  for (Index i = 0; i < n_variables; ++i) {
    a(i, i) = 0.8;
    if (i + 1 < n_variables) {
      a(i, i + 1) = 0.1;
      a(i + 1, i) = 0.1;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  return a * (0.95 / radius);
}

ProcessDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  constexpr Index kBurnIn = 500;
  const Index m = config.n_variables;
  const Index total = config.n_train + config.n_test;
  const Index onset_row = config.n_train + config.fault_onset;
  const Matrix a = default_coupling_matrix(m);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<bool> is_fault_channel(static_cast<std::size_t>(m), false);
  for (auto c : config.fault_channels) is_fault_channel[static_cast<std::size_t>(c)] = true;

  Vector state = Vector::Zero(m);
  Vector noise(m);
  Matrix values(total, m);
  for (Index t = -kBurnIn; t < total; ++t) {
    for (Index j = 0; j < m; ++j) noise(j) = gauss(rng);
    if (config.fault_type == FaultType::random_variation && t >= onset_row) {
      for (Index j = 0; j < m; ++j) {
        if (is_fault_channel[static_cast<std::size_t>(j)]) noise(j) *= 1.0 + config.fault_amplitude;
      }
    }
    state = a * state + noise;
    if (t >= 0) values.row(t) = state.transpose();
  }

  // Channel scale is taken from the training phase so the amplitude is in the
  // units a monitoring engineer would see.
  const ScalerStats scale = fit_standardize(Matrix(values.topRows(config.n_train)));
  const double span = static_cast<double>(std::max<Index>(total - 1 - onset_row, 1));
  for (auto c : config.fault_channels) {
    const double sigma = scale.std(c);
    switch (config.fault_type) {
      case FaultType::step:
        for (Index t = onset_row; t < total; ++t) values(t, c) += config.fault_amplitude * sigma;
        break;
      case FaultType::slow_drift:
        for (Index t = onset_row; t < total; ++t) {
          values(t, c) += config.fault_amplitude * sigma * static_cast<double>(t - onset_row) /
                          span;
        }
        break;
      case FaultType::sticking: {
        const double frozen = values(onset_row, c);
        for (Index t = onset_row; t < total; ++t) values(t, c) = frozen;
        break;
      }
      case FaultType::none:
      case FaultType::random_variation:
        break;
    }
  }

  ProcessDataset ds;
  ds.values = std::move(values);
  ds.labels.assign(static_cast<std::size_t>(total), kNormalLabel);
  if (config.fault_type != FaultType::none) {
    std::fill(ds.labels.begin() + onset_row, ds.labels.end(), 1);
  }
  ds.name = "synthetic-" + to_string(config.fault_type) + "-seed" + std::to_string(config.seed);
  ds.train_rows = config.n_train;
  return ds;
}

std::string synthetic_metadata(const SyntheticConfig& config) {
  std::vector<std::string> channels;
  for (auto c : config.fault_channels) channels.push_back(std::to_string(c));
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  out << "[synthetic]\n"
      << "n_variables = " << config.n_variables << "\n"
      << "n_train = " << config.n_train << "\n"
      << "n_test = " << config.n_test << "\n"
      << "fault_type = " << to_string(config.fault_type) << "\n"
      << "fault_amplitude = " << config.fault_amplitude << "\n"
      << "fault_channels = " << ini::join(channels) << "\n"
      << "fault_onset = " << config.fault_onset << "\n"
      << "seed = " << config.seed << "\n"
      << "coupling = tridiagonal(0.8, 0.1) rescaled to spectral radius 0.95\n";
  return out.str();
}

SyntheticConfig synthetic_config_from_tree(const ini::Tree& tree, const std::string& section) {
  const std::string s = section + ".";
  SyntheticConfig c;
  c.n_variables = ini::get_int(tree, s + "n_variables", c.n_variables);
  c.n_train = ini::get_int(tree, s + "n_train", c.n_train);
  c.n_test = ini::get_int(tree, s + "n_test", c.n_test);
  c.fault_type = fault_type_from_string(ini::get_string(tree, s + "fault_type", "none"));
  c.fault_amplitude = ini::get_double(tree, s + "fault_amplitude", 0.0);
  for (auto ch : ini::get_int_list(tree, s + "fault_channels", {})) {
    c.fault_channels.push_back(static_cast<Index>(ch));
  }
  c.fault_onset = ini::get_int(tree, s + "fault_onset", 0);
  c.seed = ini::get_u64(tree, s + "seed", 0);
  c.validate();
  return c;
}

SyntheticConfig synthetic_config_from_ini(const std::filesystem::path& path) {
  return synthetic_config_from_tree(ini::read_file(path));
}

SyntheticConfig synthetic_config_from_ini_text(const std::string& text) {
  return synthetic_config_from_tree(ini::parse(text));
}

}  // namespace aefenet
