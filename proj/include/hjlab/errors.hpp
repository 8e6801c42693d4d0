#pragma once

#include <stdexcept>
#include <string>

namespace hjlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// A growth model produced a non-finite value or is otherwise ill-defined.
class ModelError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "model"; }
};

/// Query outside the admissible set (trait outside the viability set, wrong family...).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Iterative solver failed; carries the last residual it saw.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual = 0.0)
      : Error(what), last_residual_(last_residual) {}
  const char* kind() const noexcept override { return "solver"; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Invalid parameters, grids, time steps, or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// A structural assumption on the model does not hold (e.g. non-unique maximizer).
class AssumptionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "assumption"; }
};

}  // namespace hjlab
