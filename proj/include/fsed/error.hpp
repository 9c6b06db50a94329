#pragma once

#include <stdexcept>
#include <string>

namespace fsed {

// Bad arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable or structurally malformed input data, or data that cannot satisfy
// an operation's preconditions (e.g. no label survives a shot filter).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical or runtime failure while computing.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fsed
