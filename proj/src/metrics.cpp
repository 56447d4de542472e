#include "aefenet/metrics.hpp"

#include "aefenet/common.hpp"
#include "aefenet/datasets.hpp"

namespace aefenet::eval {

namespace {

double flagged_fraction(const std::vector<bool>& flags, std::span<const int> labels,
                        bool fault_class, const char* what) {
  if (flags.size() != labels.size()) {
    throw InvalidArgument(std::string(what) + ": flags and labels differ in length");
  }
  std::size_t total = 0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const bool is_fault = labels[i] != kNormalLabel;
    if (is_fault != fault_class) continue;
    ++total;
    if (flags[i]) ++flagged;
  }
  if (total == 0) {
    throw InvalidArgument(std::string(what) + ": no " + (fault_class ? "fault" : "normal") +
                          " samples");
  }
  return static_cast<double>(flagged) / static_cast<double>(total);
}

}  // namespace

double fdr(const std::vector<bool>& flags, std::span<const int> labels) {
  return flagged_fraction(flags, labels, true, "fdr");
}

double far(const std::vector<bool>& flags, std::span<const int> labels) {
  return flagged_fraction(flags, labels, false, "far");
}

}  // namespace aefenet::eval
