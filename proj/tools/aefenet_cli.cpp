// Batch front end: generate synthetic data, train models, score test sets,
// run experiment grids and re-render reports.

#include <CLI11.hpp>

#include "aefenet/eval.hpp"
#include "aefenet/pipeline.hpp"
#include "aefenet/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace aefenet;

namespace {

// Files written by the current command; removed again if the command fails.
class OutputSet {
 public:
  void write(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      if (!out) {
        fs::remove(tmp);
        throw Error("write failed: " + path.string());
      }
    }
    fs::rename(tmp, path);
    written_.push_back(path);
  }
  void track(const fs::path& path) { written_.push_back(path); }
  void discard() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    written_.clear();
  }

 private:
  std::vector<fs::path> written_;
};

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::string csv_text(const Matrix& values, const std::vector<std::string>& header) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
    out << "\n";
  }
  return out.str();
}

std::vector<std::string> variable_names(Index n) {
  std::vector<std::string> names;
  for (Index j = 0; j < n; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

struct GenerateArgs {
  std::string config;
  std::string out;
};

void run_generate(const GenerateArgs& a, OutputSet& outputs) {
  const SyntheticConfig config = synthetic_config_from_ini(a.config);
  const ProcessDataset all = generate_synthetic(config);
  const auto header = variable_names(config.n_variables);
  const fs::path base(a.out);
  const fs::path train_path = base.string() + "_train.csv";
  const fs::path test_path = base.string() + "_test.csv";
  const fs::path meta_path = base.string() + ".meta";
  outputs.write(train_path, csv_text(all.train_phase().values, header));
  outputs.write(test_path, csv_text(all.test_phase().values, header));
  std::ostringstream meta;
  meta << synthetic_metadata(config) << "train_file = " << train_path.filename().string()
       << "\ntest_file = " << test_path.filename().string()
       << "\nfault_onset_row = " << config.fault_onset << "\n";
  outputs.write(meta_path, meta.str());
  std::cout << "wrote " << train_path.string() << " (" << config.n_train << " rows), "
            << test_path.string() << " (" << config.n_test << " rows), " << meta_path.string()
            << "\nseed " << config.seed << "\n";
}

struct TrainArgs {
  std::string train;
  std::string config;
  std::string model;
  bool header = false;
};

void run_train(const TrainArgs& a, OutputSet& outputs) {
  const PipelineConfig config =
      a.config.empty() ? PipelineConfig{} : load_pipeline_config(a.config);
  const ProcessDataset train = load_csv(a.train, a.header);
  const FitResult fit = fit_with_history(train, config);
  const std::string bytes = serialize_model(fit.model);
  save(fit.model, a.model);
  outputs.track(a.model);

  const auto& m = fit.model;
  std::cout << "training rows " << train.rows() << " x " << train.cols() << "\n"
            << "base features " << m.bank.k() << "\n";
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    std::cout << "layer " << l + 1 << ": input " << layer.input_dim << ", subsets "
              << layer.subsets.size() << ", fused " << layer.pca.mean.size() << ", pca "
              << layer.pca.projection.cols() << ", code " << layer.autoencoder.code_dim
              << ", seed " << layer.config.seed << ", final loss " << std::setprecision(6)
              << layer.final_loss << "\n";
  }
  std::cout << "decision rows " << fit.decision_rows << ", valid from sample " << m.valid_from()
            << ", limit " << std::setprecision(10) << m.decision.limit << "\n"
            << "master seed " << m.config.seed << "\n"
            << "model " << a.model << " crc32 " << hex32(io::crc32(bytes)) << "\n";
}

struct DetectArgs {
  std::string model;
  std::string test;
  std::string out;
  Index onset = -1;
  bool header = false;
};

void run_detect(const DetectArgs& a, OutputSet& outputs) {
  const FenetModel model = load(a.model);
  ProcessDataset test = load_csv(a.test, a.header);
  if (a.onset >= 0) {
    if (a.onset > test.rows()) throw InvalidArgument("onset lies beyond the last test row");
    test.label_fault_from(a.onset);
  }
  const DetectionResult r = detect(model, test);

  std::ostringstream out;
  out << std::setprecision(17) << "sample,d,limit,flag,label\n";
  for (Index i = 0; i < r.d.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << r.valid_from + i << "," << r.d(i) << "," << r.limit << "," << (r.flags[k] ? 1 : 0)
        << "," << r.labels[k] << "\n";
  }
  outputs.write(a.out, out.str());

  std::ostringstream meta;
  meta << "model = " << a.model << "\ntest = " << a.test << "\nmaster_seed = " << model.config.seed
       << "\nvalid_from = " << r.valid_from << "\nexcluded = " << r.summary.excluded
       << "\nlimit = " << std::setprecision(17) << r.limit << "\n";
  if (a.onset >= 0) meta << "onset = " << a.onset << "\n";
  outputs.write(a.out + ".meta", meta.str());

  std::cout << "scored " << r.d.size() << " samples (first " << r.valid_from
            << " excluded), limit " << std::setprecision(10) << r.limit << "\n";
  std::cout << std::fixed << std::setprecision(2);
  if (r.summary.far) {
    std::cout << "FAR " << *r.summary.far * 100.0 << "% over " << r.summary.normal_samples
              << " normal samples\n";
  }
  if (r.summary.fdr) {
    std::cout << "FDR " << *r.summary.fdr * 100.0 << "% over " << r.summary.fault_samples
              << " fault samples\n";
  }
}

struct EvaluateArgs {
  std::string grid;
  std::string out;
};

void run_evaluate(const EvaluateArgs& a, OutputSet& outputs) {
  const auto grid = eval::load_grid(a.grid);
  const auto report = eval::run_experiment(grid);
  const fs::path csv = eval::write_report(report, a.out);
  outputs.track(csv);
  outputs.track(fs::path(csv).replace_extension(".txt"));
  std::cout << eval::report_table(report) << "wrote " << csv.string() << "\n";
}

struct ReportArgs {
  std::string in;
  std::string out;
};

void run_report(const ReportArgs& a, OutputSet& outputs) {
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw Error("cannot open report: " + a.in);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto report = eval::parse_report_csv(buffer.str());
  const std::string table = eval::report_table(report);
  if (!a.out.empty()) outputs.write(a.out, table);
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault detection with stacked window-SVD autoencoder features"};
  app.require_subcommand(1, 1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic train/test dataset");
  generate->add_option("--config", gen.config, "Synthetic data INI file")->required();
  generate->add_option("--out", gen.out, "Output path prefix")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Fit a model on normal operating data");
  train->add_option("--train", tr.train, "Training CSV (normal data only)")->required();
  train->add_option("--config", tr.config, "Pipeline INI file; defaults when omitted");
  train->add_option("--model", tr.model, "Output model file")->required();
  train->add_flag("--header", tr.header, "CSV files start with a header line");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Score a test set with a fitted model");
  detect->add_option("--model", det.model, "Model file")->required();
  detect->add_option("--test", det.test, "Test CSV")->required();
  detect->add_option("--onset", det.onset, "First faulty row of the test file")
      ->check(CLI::NonNegativeNumber);
  detect->add_option("--out", det.out, "Per-sample result CSV")->required();
  detect->add_flag("--header", det.header, "CSV files start with a header line");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run an experiment grid");
  evaluate->add_option("--grid", ev.grid, "Grid INI file")->required();
  evaluate->add_option("--out", ev.out, "Report directory")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Render a report CSV as a table");
  report->add_option("--in", rep.in, "Report CSV")->required();
  report->add_option("--out", rep.out, "Optional text output");

  CLI11_PARSE(app, argc, argv);

  OutputSet outputs;
  try {
    if (*generate) run_generate(gen, outputs);
    if (*train) run_train(tr, outputs);
    if (*detect) run_detect(det, outputs);
    if (*evaluate) run_evaluate(ev, outputs);
    if (*report) run_report(rep, outputs);
  } catch (const std::exception& e) {
    outputs.discard();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
