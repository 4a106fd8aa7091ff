#pragma once

#include <stdexcept>
#include <string>

namespace i3d {

// Argument/precondition violations. CLI maps these to exit code 2.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Geometrically or statistically degenerate inputs (zero-area mesh,
// constant rank vector, all-negative label mask, ...).
struct DegenerateInputError : ArgumentError {
  using ArgumentError::ArgumentError;
};

// Malformed files on disk; carries the offending path and byte offset.
struct FormatError : std::runtime_error {
  FormatError(const std::string& file, std::size_t offset, const std::string& what)
      : std::runtime_error(file + " @" + std::to_string(offset) + ": " + what),
        file(file),
        offset(offset) {}
  std::string file;
  std::size_t offset;
};

// Non-finite values produced during numeric work. CLI maps to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace i3d
