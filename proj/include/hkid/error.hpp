#pragma once

//! \file error.hpp
//! \brief Exception hierarchy shared by every hkid module.
//!
//! Each error carries the operation that raised it ("module::operation") and
//! an error class that the command-line driver maps onto its exit status.

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hkid {

enum class ErrorClass : int {
  parse = 1,
  validation = 2,
  numerical = 3,
  no_root = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string where, const std::string& message)
      : std::runtime_error(where + ": " + message),
        cls_(cls),
        where_(std::move(where)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorClass cls_;
  std::string where_;
};

/// Malformed input text (CSV rows, matrix files, config).
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& message)
      : Error(ErrorClass::parse, std::move(where), message) {}
};

/// Argument outside the domain of an operation, or an input invariant broken.
class DomainError : public Error {
 public:
  DomainError(std::string where, const std::string& message)
      : Error(ErrorClass::validation, std::move(where), message) {}
};

class InsufficientDataError : public Error {
 public:
  InsufficientDataError(std::string where, const std::string& message)
      : Error(ErrorClass::validation, std::move(where), message) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string where, const std::string& message)
      : Error(ErrorClass::numerical, std::move(where), message) {}
};

/// Series truncation did not reach the requested tolerance.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(std::string where, double last_term)
      : NumericalError(std::move(where),
                       "series not converged; last term magnitude " + format_magnitude(last_term)),
        last_term_(last_term) {}

  double last_term() const noexcept { return last_term_; }

 private:
  static std::string format_magnitude(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }

  double last_term_;
};

/// A zero denominator in a closed-form estimator or normalisation.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A sample whose residual vanishes exactly, which puts a pole in the γ-weights.
class PoleError : public NumericalError {
 public:
  PoleError(std::string where, std::size_t sample)
      : NumericalError(std::move(where),
                       "exact fit at sample j=" + std::to_string(sample) +
                           " puts a pole in the gamma weights; perturb lambda0 or drop the sample"),
        sample_(sample) {}

  /// One-based sample index.
  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

class NoRootError : public Error {
 public:
  NoRootError(std::string where, const std::string& message)
      : Error(ErrorClass::no_root, std::move(where), message) {}
};

}  // namespace hkid
