#pragma once

#include <stdexcept>
#include <string>

namespace vapbench {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (traces, matrices, profiles).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid knob, parameter, or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Trace file parse or invariant failure; carries the 1-based line number.
class TraceFormatError : public InputError {
 public:
  TraceFormatError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

}  // namespace vapbench
