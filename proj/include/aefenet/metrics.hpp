#pragma once

#include <span>
#include <vector>

namespace aefenet::eval {

/// Fraction of fault-labelled samples that are flagged. Throws when no
/// fault samples are present.
double fdr(const std::vector<bool>& flags, std::span<const int> labels);

/// Fraction of normal samples that are flagged. Throws when no normal
/// samples are present.
double far(const std::vector<bool>& flags, std::span<const int> labels);

}  // namespace aefenet::eval
