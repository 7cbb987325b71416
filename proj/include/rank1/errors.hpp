#pragma once

#include <stdexcept>
#include <string>

namespace rank1 {

// Base of every error raised by the library. The CLI maps these to exit
// status 2 and prints what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value incompatible with the arithmetic mode of a schedule, e.g. a
// sqrt(2) spacer in an exact-rational schedule.
class ModeError : public Error {
 public:
  using Error::Error;
};

// Exact arithmetic or a memo table grew past its configured budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// A query cannot be answered by any computable stage (time too large,
// stage beyond a finite schedule, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Invalid construction parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs for which the requested quantity is undefined (zero mass, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace rank1
