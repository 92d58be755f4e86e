#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgp/types.hpp"

namespace stgp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be positive (or negative) definite is not.
class DefinitenessError : public Error {
 public:
  DefinitenessError(std::string parameter, std::optional<Index> pivot = std::nullopt,
                    std::optional<Index> step = std::nullopt);

  const std::string& parameter() const noexcept { return parameter_; }
  std::optional<Index> pivot() const noexcept { return pivot_; }
  std::optional<Index> step() const noexcept { return step_; }

 private:
  std::string parameter_;
  std::optional<Index> pivot_;
  std::optional<Index> step_;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedKernelError : public Error {
 public:
  using Error::Error;
};

/// Input data problems (malformed CSV, duplicate sites, empty files).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Objective or gradient became non-finite during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class GradientError : public NumericalError {
 public:
  GradientError(const std::string& what, Index coordinate)
      : NumericalError(what), coordinate_(coordinate) {}
  Index coordinate() const noexcept { return coordinate_; }

 private:
  Index coordinate_;
};

/// Training hit a non-finite objective. Carries the state at the failure.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, int iteration, Vector theta,
                std::vector<double> elbo_trace)
      : NumericalError(what),
        iteration_(iteration),
        theta_(std::move(theta)),
        elbo_trace_(std::move(elbo_trace)) {}
  int iteration() const noexcept { return iteration_; }
  const Vector& theta() const noexcept { return theta_; }
  const std::vector<double>& elbo_trace() const noexcept { return elbo_trace_; }

 private:
  int iteration_;
  Vector theta_;
  std::vector<double> elbo_trace_;
};

}  // namespace stgp
