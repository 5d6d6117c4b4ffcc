#pragma once

#include <stdexcept>

namespace tiera {

// Thrown when a computation receives or produces non-finite numbers
// (diverged training, NaN gradients, ...). Maps to exit code 3 in the CLI.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an input file is malformed; the message carries the file
// name and line number. Maps to exit code 2 in the CLI.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tiera
