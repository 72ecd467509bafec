#pragma once

#include <stdexcept>
#include <string>

namespace revsim {

// Root of every exception thrown by the library. Each module derives its own
// error type carrying a `kind` enum so callers can branch without parsing
// messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (empty submissions, bad ratio, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace revsim
