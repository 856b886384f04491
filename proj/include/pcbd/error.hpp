#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcbd {

// Bad arguments to a library call: empty clouds, out-of-range classes,
// inconsistent dimensions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed text input. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A weight or pattern file that cannot be restored in full.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The null distribution cannot be fitted (e.g. all statistics identical).
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcbd
