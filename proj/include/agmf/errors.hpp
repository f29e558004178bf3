#pragma once

#include <stdexcept>
#include <string>

namespace agmf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatches, weights outside their range,
/// non-symmetric matrices and the like.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Singular or indefinite matrices encountered during evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A user-supplied model function returned non-finite values.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Every particle or component lost its likelihood mass.
class DegenerateUpdate : public Error {
 public:
  using Error::Error;
};

}  // namespace agmf
