#include "aefenet/eval.hpp"

#include "aefenet/detectors.hpp"
#include "aefenet/ini.hpp"
#include "aefenet/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace aefenet::eval {

namespace {

const std::map<std::string, std::pair<std::string, Index>>& baseline_table() {
  // method -> (bank detector kind, feature column)
  static const std::map<std::string, std::pair<std::string, Index>> table = {
      {"pca_t2", {"pca", 0}},   {"pca_q", {"pca", 1}},
      {"dpca_t2", {"dpca", 0}}, {"dpca_q", {"dpca", 1}},
      {"md1", {"md1", 0}},      {"md2", {"md2", 0}},
      {"md3", {"md3", 0}},      {"kpca_poly", {"kpca_poly", 0}},
      {"kpca_rbf", {"kpca_rbf", 0}}, {"kpca_cosine", {"kpca_cosine", 0}},
  };
  return table;
}

bool is_aefenet(const std::string& method) {
  return method == "aefenet" || method == "aefenet-plain" || method == "aefenet-sparse" ||
         method == "aefenet-variational";
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

bool is_baseline(const std::string& method) { return baseline_table().count(method) > 0; }

// ---------------------------------------------------------------------------
// Grid

void ExperimentGrid::validate() const {
  if (methods.empty()) throw InvalidArgument("experiment grid: no methods");
  if (sources.empty()) throw InvalidArgument("experiment grid: no datasets");
  for (const auto& m : methods) {
    if (!is_aefenet(m) && !is_baseline(m)) {
      throw InvalidArgument("experiment grid: unknown method '" + m + "'");
    }
  }
  const bool any_deep = std::any_of(methods.begin(), methods.end(), is_aefenet);
  if (any_deep && depths.empty()) throw InvalidArgument("experiment grid: no depths");
  for (auto d : depths) {
    if (d < 0) throw InvalidArgument("experiment grid: negative depth");
  }
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (!names.insert(s.name).second) {
      throw InvalidArgument("experiment grid: duplicate dataset '" + s.name + "'");
    }
    if (s.fault_id <= 0) throw InvalidArgument("experiment grid: fault_id must be positive");
  }
}

std::string ExperimentGrid::canonical_text() const {
  std::ostringstream out;
  std::vector<std::string> depth_items;
  for (auto d : depths) depth_items.push_back(std::to_string(d));
  out << "[grid]\nmethods = " << ini::join(methods) << "\ndepths = " << ini::join(depth_items)
      << "\n\n";
  for (const auto& s : sources) {
    out << "[data_" << s.name << "]\nfault_id = " << s.fault_id << "\n";
    if (s.synthetic) {
      const std::string meta = synthetic_metadata(*s.synthetic);
      out << "type = synthetic\n" << meta.substr(meta.find('\n') + 1);
    } else {
      out << "type = files\ntrain = " << s.train_path.generic_string()
          << "\ntest = " << s.test_path.generic_string() << "\nonset = " << s.onset
          << "\nheader = " << (s.has_header ? "true" : "false") << "\n";
    }
    out << "\n";
  }
  out << pipeline_config_to_text(pipeline);
  return out.str();
}

std::string ExperimentGrid::config_hash() const { return hex32(io::crc32(canonical_text())); }

ExperimentGrid grid_from_text(const std::string& text, const std::filesystem::path& base_dir) {
  const ini::Tree tree = ini::parse(text);
  ExperimentGrid grid;
  if (auto m = ini::get_string(tree, "grid.methods")) grid.methods = ini::split_list(*m);
  std::vector<long long> depths(grid.depths.begin(), grid.depths.end());
  depths = ini::get_int_list(tree, "grid.depths", depths);
  grid.depths.assign(depths.begin(), depths.end());

  ini::Tree pipeline_tree;
  for (const auto& [section, child] : tree) {
    if (section == "grid") continue;
    if (section.rfind("data_", 0) == 0) {
      DataSource s;
      s.name = section.substr(5);
      const std::string p = section + ".";
      s.fault_id = static_cast<int>(ini::get_int(tree, p + "fault_id", 1));
      const std::string type = ini::get_string(tree, p + "type", "synthetic");
      if (type == "synthetic") {
        s.synthetic = synthetic_config_from_tree(tree, section);
      } else if (type == "files") {
        auto resolve = [&](const std::string& key) {
          auto v = ini::get_string(tree, p + key);
          if (!v) throw ParseError("grid: dataset '" + s.name + "' is missing '" + key + "'");
          std::filesystem::path path(*v);
          return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        s.train_path = resolve("train");
        s.test_path = resolve("test");
        s.onset = ini::get_int(tree, p + "onset", 0);
        const std::string header = ini::get_string(tree, p + "header", "false");
        s.has_header = header == "true" || header == "1" || header == "yes";
      } else {
        throw ParseError("grid: dataset '" + s.name + "' has unknown type '" + type + "'");
      }
      grid.sources.push_back(std::move(s));
      continue;
    }
    pipeline_tree.add_child(section, child);
  }
  grid.pipeline = pipeline_config_from_ini(pipeline_tree);
  grid.validate();
  return grid;
}

ExperimentGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return grid_from_text(buffer.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Running

SourceData resolve_source(const DataSource& source) {
  SourceData out;
  if (source.synthetic) {
    const ProcessDataset all = generate_synthetic(*source.synthetic);
    out.train = all.train_phase();
    out.test = all.test_phase();
    for (auto& l : out.test.labels) {
      if (l != kNormalLabel) l = source.fault_id;
    }
  } else {
    out.train = load_csv(source.train_path, source.has_header);
    out.test = load_csv(source.test_path, source.has_header);
    out.test.label_fault_from(source.onset, source.fault_id);
  }
  out.train.name = source.name + ":train";
  out.test.name = source.name + ":test";
  return out;
}

namespace {

struct Tally {
  Index flagged = 0;
  Index total = 0;
  Index excluded = 0;
  std::string error;
};

void tally_normals(Tally& t, const std::vector<bool>& flags, const std::vector<int>& labels) {
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (labels[i] != kNormalLabel) continue;
    ++t.total;
    if (flags[i]) ++t.flagged;
  }
}

ReportCell fdr_cell(const DataSource& s, const std::string& method, Index depth) {
  ReportCell c;
  c.dataset = s.name;
  c.fault_id = s.fault_id;
  c.method = method;
  c.depth = depth;
  c.metric = "fdr";
  return c;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentGrid& grid) {
  grid.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config_hash = grid.config_hash();
  report.seed = grid.pipeline.seed;

  std::vector<std::pair<std::string, Index>> columns;
  for (const auto& m : grid.methods) {
    if (is_baseline(m)) {
      columns.emplace_back(m, -1);
    } else {
      for (auto d : grid.depths) columns.emplace_back(m, d);
    }
  }
  std::map<std::pair<std::string, Index>, Tally> normals;

  for (const auto& source : grid.sources) {
    SourceData data;
    std::string load_error;
    try {
      data = resolve_source(source);
    } catch (const std::exception& e) {
      load_error = e.what();
    }

    for (const auto& method : grid.methods) {
      if (!load_error.empty()) {
        for (const auto& [m, d] : columns) {
          if (m != method) continue;
          auto c = fdr_cell(source, m, d);
          c.error = "dataset: " + load_error;
          report.cells.push_back(std::move(c));
        }
        continue;
      }

      if (is_baseline(method)) {
        auto cell = fdr_cell(source, method, -1);
        try {
          const auto& [kind, column] = baseline_table().at(method);
          const auto entry = detectors::fit_detector(kind, data.train.values, grid.pipeline.bank);
          const Vector train_scores = detectors::score_entry(entry, data.train.values).col(column);
          const double limit = detectors::detector_control_limit(
              std::span<const double>(train_scores.data(), train_scores.size()),
              grid.pipeline.confidence);
          const Vector test_scores = detectors::score_entry(entry, data.test.values).col(column);
          std::vector<bool> flags(static_cast<std::size_t>(test_scores.size()));
          for (Index i = 0; i < test_scores.size(); ++i) {
            flags[static_cast<std::size_t>(i)] = test_scores(i) > limit;
          }
          cell.value = fdr(flags, data.test.labels);
          cell.samples = static_cast<Index>(std::count_if(
              data.test.labels.begin(), data.test.labels.end(),
              [](int l) { return l != kNormalLabel; }));
          tally_normals(normals[{method, -1}], flags, data.test.labels);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
        continue;
      }

      PipelineConfig config = grid.pipeline;
      if (method != "aefenet") {
        const auto variant = ae::variant_from_string(method.substr(std::string("aefenet-").size()));
        config.layer_template.variant = variant;
        for (auto& l : config.layers) l.variant = variant;
      }
      std::vector<FitResult> fits;
      std::string fit_error;
      try {
        fits = fit_depths(data.train, config, grid.depths);
      } catch (const std::exception& e) {
        fit_error = e.what();
      }
      for (std::size_t i = 0; i < grid.depths.size(); ++i) {
        auto cell = fdr_cell(source, method, grid.depths[i]);
        if (!fit_error.empty()) {
          cell.error = fit_error;
          report.cells.push_back(std::move(cell));
          continue;
        }
        try {
          const auto result = detect(fits[i].model, data.test);
          cell.excluded = result.valid_from;
          cell.samples = result.summary.fault_samples;
          if (!result.summary.fdr) throw InvalidArgument("no fault samples in the valid region");
          cell.value = result.summary.fdr;
          auto& t = normals[{method, grid.depths[i]}];
          t.excluded = result.valid_from;
          tally_normals(t, result.flags, result.labels);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }

  for (const auto& [m, d] : columns) {
    ReportCell c;
    c.dataset = "normal";
    c.fault_id = 0;
    c.method = m;
    c.depth = d;
    c.metric = "far";
    const auto it = normals.find({m, d});
    if (it == normals.end() || it->second.total == 0) {
      c.error = "no normal samples";
    } else {
      c.value = static_cast<double>(it->second.flagged) / static_cast<double>(it->second.total);
      c.samples = it->second.total;
      c.excluded = it->second.excluded;
    }
    report.cells.push_back(std::move(c));
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Report views

std::vector<const ReportCell*> ExperimentReport::fdr_cells() const {
  std::vector<const ReportCell*> out;
  for (const auto& c : cells) {
    if (c.metric == "fdr") out.push_back(&c);
  }
  return out;
}

std::vector<const ReportCell*> ExperimentReport::far_cells() const {
  std::vector<const ReportCell*> out;
  for (const auto& c : cells) {
    if (c.metric == "far") out.push_back(&c);
  }
  return out;
}

const ReportCell* ExperimentReport::find(const std::string& dataset, const std::string& method,
                                         Index depth, const std::string& metric) const {
  for (const auto& c : cells) {
    if (c.dataset == dataset && c.method == method && c.depth == depth && c.metric == metric) {
      return &c;
    }
  }
  return nullptr;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "dataset,fault_id,method,depth,metric,value,samples,excluded,error\n";
  for (const auto& c : report.cells) {
    out << c.dataset << "," << c.fault_id << "," << c.method << "," << c.depth << "," << c.metric
        << ",";
    if (c.value) out << *c.value;
    out << "," << c.samples << "," << c.excluded << "," << sanitize(c.error) << "\n";
  }
  return out.str();
}

ExperimentReport parse_report_csv(const std::string& text) {
  ExperimentReport report;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("dataset,", 0) != 0) {
    throw ParseError("report: missing header line");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f.size() == 8) f.emplace_back();
    if (f.size() != 9) throw ParseError("report: malformed line " + std::to_string(line_no));
    ReportCell c;
    try {
      c.dataset = f[0];
      c.fault_id = std::stoi(f[1]);
      c.method = f[2];
      c.depth = std::stoll(f[3]);
      c.metric = f[4];
      if (!f[5].empty()) c.value = std::stod(f[5]);
      c.samples = std::stoll(f[6]);
      c.excluded = std::stoll(f[7]);
      c.error = f[8];
    } catch (const std::logic_error&) {
      throw ParseError("report: malformed line " + std::to_string(line_no));
    }
    report.cells.push_back(std::move(c));
  }
  return report;
}

std::string report_hash(const ExperimentReport& report) {
  return hex32(io::crc32(report_csv(report)));
}

std::string report_table(const ExperimentReport& report) {
  std::vector<std::pair<std::string, Index>> columns;
  std::vector<std::pair<int, std::string>> rows;
  for (const auto& c : report.cells) {
    std::pair<std::string, Index> col{c.method, c.depth};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (c.metric == "fdr") {
      std::pair<int, std::string> row{c.fault_id, c.dataset};
      if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    }
  }

  auto header_of = [](const std::pair<std::string, Index>& col) {
    return col.second < 0 ? col.first : col.first + " l=" + std::to_string(col.second);
  };
  auto value_of = [&](const std::string& dataset, const std::string& metric,
                      const std::pair<std::string, Index>& col) -> std::string {
    const auto* c = report.find(dataset, col.first, col.second, metric);
    if (!c) return "";
    if (!c->value) return "error";
    std::ostringstream v;
    v << std::fixed << std::setprecision(2) << *c->value * 100.0 << "%";
    return v.str();
  };

  std::size_t label_width = std::string("0 normal (FAR)").size();
  for (const auto& [id, name] : rows) {
    label_width = std::max(label_width, std::to_string(id).size() + 1 + name.size());
  }
  std::vector<std::size_t> widths;
  for (const auto& col : columns) widths.push_back(std::max<std::size_t>(header_of(col).size(), 8));

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "fault";
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out << "  " << std::right << std::setw(static_cast<int>(widths[j])) << header_of(columns[j]);
  }
  out << "\n";
  out << std::left << std::setw(static_cast<int>(label_width)) << "0 normal (FAR)";
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out << "  " << std::right << std::setw(static_cast<int>(widths[j]))
        << value_of("normal", "far", columns[j]);
  }
  out << "\n";
  for (const auto& [id, name] : rows) {
    out << std::left << std::setw(static_cast<int>(label_width))
        << (std::to_string(id) + " " + name);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out << "  " << std::right << std::setw(static_cast<int>(widths[j]))
          << value_of(name, "fdr", columns[j]);
    }
    out << "\n";
  }

  out << "\nRates are computed over the valid region only; leading samples excluded per depth:";
  std::set<std::pair<Index, Index>> exclusions;
  for (const auto& c : report.cells) exclusions.insert({c.depth, c.excluded});
  for (const auto& [d, e] : exclusions) {
    if (d >= 0) out << " l=" << d << ":" << e;
  }
  out << "\n";
  for (const auto& c : report.cells) {
    if (!c.error.empty()) {
      out << "error [" << c.dataset << ", " << header_of({c.method, c.depth}) << "]: " << c.error
          << "\n";
    }
  }
  if (!report.config_hash.empty()) {
    out << "config hash: " << report.config_hash << "  master seed: " << report.seed
        << "  runtime: " << std::fixed << std::setprecision(1) << report.runtime_seconds << " s\n";
  }
  out << "report hash: " << report_hash(report) << "\n";
  return out.str();
}

std::filesystem::path write_report(const ExperimentReport& report,
                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = "report_" + report.config_hash;
  const auto csv_path = dir / (stem + ".csv");
  const auto txt_path = dir / (stem + ".txt");
  try {
    {
      std::ofstream csv(csv_path, std::ios::binary);
      csv << report_csv(report);
      if (!csv) throw Error("write failed: " + csv_path.string());
    }
    {
      std::ofstream txt(txt_path, std::ios::binary);
      txt << report_table(report);
      if (!txt) throw Error("write failed: " + txt_path.string());
    }
  } catch (...) {
    std::filesystem::remove(csv_path);
    std::filesystem::remove(txt_path);
    throw;
  }
  return csv_path;
}

}  // namespace aefenet::eval
