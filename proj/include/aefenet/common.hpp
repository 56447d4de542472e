#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace aefenet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Floor applied to every standard deviation before division.
inline constexpr double kStdFloor = 1e-8;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition (shape, range, finiteness).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file content.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: degenerate covariance, non-finite loss, and the like.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Model container failed validation (magic, version, checksum).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool all_finite(const Matrix& m);

}  // namespace aefenet
