#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to be symmetric positive definite is not.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel failed (non-convergence, non-finite data).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The problem cannot be solved as posed (e.g. identically zero weights).
class DegenerateProblemError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for its inputs.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// User supplied configuration or specification violates an invariant.
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lowrank
