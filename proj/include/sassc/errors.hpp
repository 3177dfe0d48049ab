#pragma once

#include <stdexcept>
#include <string>

namespace sassc {

/// Malformed or out-of-range user input (bad instance files, invalid bounds).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficient field violates uniform ellipticity (a <= 0 somewhere).
class EllipticityError : public InputError {
 public:
  using InputError::InputError;
};

/// An operation was called outside its documented precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A linear or Newton solve broke down; carries the last residual seen.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace sassc
