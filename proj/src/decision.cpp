#include "aefenet/decision.hpp"

#include "aefenet/datasets.hpp"
#include "aefenet/numerics.hpp"

#include <cmath>
#include <span>

namespace aefenet::decision {

DecisionModel fit_decision(const Matrix& train_codes, double confidence, double p) {
  if (train_codes.rows() < 2) throw InvalidArgument("fit_decision: need at least 2 code rows");
  if (!(p >= 1.0)) throw InvalidArgument("fit_decision: norm order must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidArgument("fit_decision: confidence must lie in (0, 1)");
  }
  const ScalerStats stats = fit_standardize(train_codes);
  DecisionModel model;
  model.mean = stats.mean;
  model.std = stats.std;
  model.p = p;
  model.confidence = confidence;
  const Vector d = detection_index(model, train_codes);
  model.limit = numerics::empirical_quantile(std::span<const double>(d.data(), d.size()),
                                             confidence);
  return model;
}

Vector detection_index(const DecisionModel& model, const Matrix& codes) {
  if (codes.cols() != model.mean.size()) {
    throw InvalidArgument("detection_index: code has " + std::to_string(codes.cols()) +
                          " entries, model expects " + std::to_string(model.mean.size()));
  }
  Matrix z = codes.rowwise() - model.mean.transpose();
  z.array().rowwise() /= model.std.transpose().array();
  z = z.cwiseAbs();
  if (model.p == 1.0) return z.rowwise().sum();
  if (model.p == 2.0) return z.rowwise().norm();
  return z.array().pow(model.p).rowwise().sum().pow(1.0 / model.p).matrix();
}

double detection_index(const DecisionModel& model, const Vector& code) {
  return detection_index(model, Matrix(code.transpose()))(0);
}

std::vector<bool> alarms(const DecisionModel& model, const Vector& d) {
  std::vector<bool> flags(static_cast<std::size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) flags[static_cast<std::size_t>(i)] = d(i) > model.limit;
  return flags;
}

void write_decision(io::ByteWriter& out, const DecisionModel& model) {
  out.vec(model.mean);
  out.vec(model.std);
  out.f64(model.p);
  out.f64(model.limit);
  out.f64(model.confidence);
}

DecisionModel read_decision(io::ByteReader& in) {
  DecisionModel m;
  m.mean = in.vec();
  m.std = in.vec();
  m.p = in.f64();
  m.limit = in.f64();
  m.confidence = in.f64();
  if (m.mean.size() != m.std.size()) throw FormatError("decision model: shape mismatch");
  return m;
}

}  // namespace aefenet::decision
