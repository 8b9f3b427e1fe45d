#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plantmf {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration / usage.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures of a numerical procedure (solver, fit, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationDiverged : public NumericalError {
 public:
  IntegrationDiverged(std::size_t step, std::size_t index, const std::string& what)
      : NumericalError("integration diverged at step " + std::to_string(step) +
                       ", individual " + std::to_string(index) + ": " + what),
        step_(step),
        index_(index) {}

  std::size_t step() const { return step_; }
  std::size_t index() const { return index_; }

 private:
  std::size_t step_;
  std::size_t index_;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Input or output file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace plantmf
