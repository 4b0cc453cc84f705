#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace smdn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Carries the 1-based CSV row when
/// the problem is attributable to one record.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what) {}
  ValidationError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

private:
  std::optional<std::size_t> row_;
};

/// A call that violates an operation's precondition (bad parameter, wrong
/// model for the method, missing fit).
class PreconditionError : public Error {
public:
  using Error::Error;
};

}  // namespace smdn
