#pragma once

#include <stdexcept>
#include <string>

namespace vaemir {

// Base class for every error raised by the library. The CLI maps the three
// subclasses onto its exit codes (usage = 1, data = 2, numerical = 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument or configuration violates a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or inconsistent (bad JSONL line, dimension mismatch
// between a model and a dataset, missing labels, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Training diverged: a loss or a parameter became NaN or infinite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace vaemir
