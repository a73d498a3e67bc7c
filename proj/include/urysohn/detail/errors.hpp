#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace urysohn {

/// Bad caller input: precondition violations, malformed files, unknown names.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed CSV input. Carries the 1-based line number of the offending row.
class CsvError : public InputError {
 public:
  CsvError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A computation that cannot produce a meaningful result (non-finite kernel
/// values, singular linearizations, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace urysohn
