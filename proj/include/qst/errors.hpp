#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qst {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

// Usage / input validation problems (CLI exit code 2).
struct ValidationError : Error {
  using Error::Error;
};

struct DegenerateGroundState : Error {
  DegenerateGroundState(double gap, double tol)
      : Error("degenerate ground state: gap " + std::to_string(gap) +
              " below tolerance " + std::to_string(tol)),
        gap(gap), tol(tol) {}
  double gap;
  double tol;
};

struct GenerationFailed : Error {
  GenerationFailed(std::uint64_t seed, int attempts)
      : Error("record generation failed after " + std::to_string(attempts) +
              " resamples (seed " + std::to_string(seed) + ")"),
        seed(seed), attempts(attempts) {}
  std::uint64_t seed;
  int attempts;
};

struct NotPSDError : Error {
  using Error::Error;
};

struct ZeroNormError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

// File format problems, each a distinct type so callers can tell them apart.
struct FormatError : Error {
  using Error::Error;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

struct TruncatedError : FormatError {
  using FormatError::FormatError;
};

struct TopologyMismatchError : FormatError {
  using FormatError::FormatError;
};

struct MagicError : FormatError {
  using FormatError::FormatError;
};

struct ShapeError : FormatError {
  using FormatError::FormatError;
};

} // namespace qst
