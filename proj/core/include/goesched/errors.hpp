#pragma once

#include <stdexcept>
#include <string>

namespace goesched {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration document does not match the expected schema.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Well-formed configuration that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// State space too large to enumerate; use a model-free scheduler instead.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_span)
      : Error(what), last_span_(last_span) {}
  double last_span() const noexcept { return last_span_; }

 private:
  double last_span_;
};

// No Lagrange multiplier makes the policy meet the budget.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition (bad action set, bad state index).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace goesched
