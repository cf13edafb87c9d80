#pragma once

#include <stdexcept>
#include <string>

namespace infoclip {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch or non-square input where a square one is required.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Input values outside the operation's domain (asymmetry beyond tolerance,
/// non-finite entries, invalid labels, unsupported alpha, ...).
class InputError : public Error {
public:
  using Error::Error;
};

/// Degenerate numerical input: zero trace, zero rows, all eigenvalues
/// clamped away, diverged training state.
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance within the iteration cap.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Malformed tensor file or run configuration.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace infoclip
