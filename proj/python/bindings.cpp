#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aefenet/eval.hpp"
#include "aefenet/pipeline.hpp"
#include "aefenet/transform.hpp"

namespace py = pybind11;
using namespace aefenet;

namespace {

ProcessDataset dataset_from(const Matrix& values, std::optional<Index> onset) {
  ProcessDataset ds;
  ds.values = values;
  ds.labels.assign(static_cast<std::size_t>(values.rows()), kNormalLabel);
  if (onset) ds.label_fault_from(*onset);
  ds.validate();
  return ds;
}

py::dict detection_dict(const DetectionResult& r) {
  py::dict out;
  out["d"] = r.d;
  out["limit"] = r.limit;
  out["flags"] = r.flags;
  out["labels"] = r.labels;
  out["valid_from"] = r.valid_from;
  out["fdr"] = r.summary.fdr;
  out["far"] = r.summary.far;
  return out;
}

}  // namespace

PYBIND11_MODULE(_aefenet, m) {
  m.doc() = "Stacked window-SVD autoencoder features for process fault detection";

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "generate_synthetic",
      [](const std::string& ini_text) {
        const auto config = synthetic_config_from_ini_text(ini_text);
        const auto all = generate_synthetic(config);
        const auto test = all.test_phase();
        return py::make_tuple(all.train_phase().values, test.values, test.labels);
      },
      py::arg("config_text"),
      "Returns (train, test, test_labels) for a [synthetic] INI text.");

  m.def("window_singular_values", &transform::normalized_singular_values, py::arg("window"),
        "Singular values of a window after pooled scalar standardization.");
  m.def("column_subsets", &transform::select_column_subsets, py::arg("m"), py::arg("h"),
        py::arg("max_subsets") = 30, py::arg("seed") = 0);

  m.def(
      "fdr", [](const std::vector<bool>& f, const std::vector<int>& l) { return eval::fdr(f, l); },
      py::arg("flags"), py::arg("labels"));
  m.def(
      "far", [](const std::vector<bool>& f, const std::vector<int>& l) { return eval::far(f, l); },
      py::arg("flags"), py::arg("labels"));

  m.def(
      "default_config", [] { return pipeline_config_to_text(PipelineConfig{}); },
      "Canonical INI text of the default pipeline configuration.");

  py::class_<FenetModel>(m, "Model")
      .def_property_readonly("depth", &FenetModel::depth)
      .def_property_readonly("input_dim", &FenetModel::input_dim)
      .def_property_readonly("valid_from", &FenetModel::valid_from)
      .def_property_readonly("limit", [](const FenetModel& f) { return f.decision.limit; })
      .def_property_readonly("config_text",
                             [](const FenetModel& f) { return pipeline_config_to_text(f.config); })
      .def(
          "detect",
          [](const FenetModel& f, const Matrix& test, std::optional<Index> onset) {
            return detection_dict(detect(f, dataset_from(test, onset)));
          },
          py::arg("test"), py::arg("onset") = py::none(),
          "Scores `test`; with `onset`, rows from it on are labelled faulty.")
      .def("save", [](const FenetModel& f, const std::string& path) { save(f, path); })
      .def("to_bytes", [](const FenetModel& f) { return py::bytes(serialize_model(f)); });

  m.def(
      "fit",
      [](const Matrix& train, const std::string& config_text) {
        const auto config = pipeline_config_from_text(config_text);
        py::gil_scoped_release release;
        return fit(dataset_from(train, std::nullopt), config);
      },
      py::arg("train"), py::arg("config_text") = "",
      "Fits a model on normal training data; config is INI text (defaults when empty).");
  m.def("load", [](const std::string& path) { return load(path); }, py::arg("path"));
  m.def(
      "from_bytes", [](const py::bytes& b) { return deserialize_model(std::string(b)); },
      py::arg("data"));
}
