#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covnorm {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct InputError : Error {
  using Error::Error;
};

// Degenerate statistics: zero variance, empty spectrum, eigenvalue at the floor.
struct DegeneracyError : Error {
  using Error::Error;
};

// Too few samples to estimate the requested quantity.
struct InsufficientDataError : Error {
  using Error::Error;
};

// Singular normal matrix in a least-squares solve.
struct RankDeficiencyError : Error {
  using Error::Error;
};

// Optimizer produced a non-finite objective.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration(iteration) {}
  std::size_t iteration;
};

// Argument outside its mathematical domain.
struct DomainError : Error {
  using Error::Error;
};

// File access problems.
struct IoError : Error {
  using Error::Error;
};

// Malformed file contents: bad magic, bad shape, non-finite payload.
struct FormatError : IoError {
  using IoError::IoError;
};

}  // namespace covnorm
