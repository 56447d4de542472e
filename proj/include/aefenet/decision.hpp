#pragma once

#include "aefenet/common.hpp"
#include "aefenet/serialize.hpp"

#include <vector>

namespace aefenet::decision {

/// Standardized p-norm detection index with an empirical control limit.
struct DecisionModel {
  Vector mean;
  Vector std;  // floored at kStdFloor
  double p = 1.0;
  double limit = 0.0;
  double confidence = 0.99;
};

DecisionModel fit_decision(const Matrix& train_codes, double confidence, double p = 1.0);

/// D = || (code - mean) / std ||_p
double detection_index(const DecisionModel& model, const Vector& code);
Vector detection_index(const DecisionModel& model, const Matrix& codes);

/// flag_q = D_q > limit (strict).
std::vector<bool> alarms(const DecisionModel& model, const Vector& d);

void write_decision(io::ByteWriter& out, const DecisionModel& model);
DecisionModel read_decision(io::ByteReader& in);

}  // namespace aefenet::decision
