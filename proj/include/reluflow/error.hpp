#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reluflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on an argument does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Singular systems, failed iterations, missing brackets.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// The iterate blew up (non-finite or beyond the divergence bound).
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : NumericalError(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace reluflow
