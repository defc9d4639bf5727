#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mertenslab {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (log log x for x <= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent caller input (unsorted grid, lo > hi, unknown check id).
class InputError : public Error {
 public:
  using Error::Error;
};

// Request exceeds the configured resource budget of the sieve.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// The prime cache does not reach far enough for the requested evaluation.
class InsufficientCacheError : public Error {
 public:
  InsufficientCacheError(const std::string& what, double required_limit)
      : Error(what), required_limit_(required_limit) {}
  double required_limit() const noexcept { return required_limit_; }

 private:
  double required_limit_;
};

// A tolerance could not be met. Carries what was achieved and, when it can be
// computed, the cache limit / cutoff that would meet the request.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double achieved_bound,
              std::optional<double> required_limit = std::nullopt)
      : Error(what), achieved_bound_(achieved_bound), required_limit_(required_limit) {}
  double achieved_bound() const noexcept { return achieved_bound_; }
  std::optional<double> required_limit() const noexcept { return required_limit_; }

 private:
  double achieved_bound_;
  std::optional<double> required_limit_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Prime cache file format errors.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Header count disagrees with the payload length, or the payload is not a valid prime list.
class PayloadMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace mertenslab
