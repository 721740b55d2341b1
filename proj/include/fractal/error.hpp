#pragma once

#include <stdexcept>
#include <string>

namespace fractal {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cell structure or subdivision rule is internally inconsistent.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A linear solve met a singular block (disconnected network component).
class SingularNetworkError : public Error {
 public:
  using Error::Error;
};

/// Arguments violate an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Closed-form dimension counts or consistency checks failed internally.
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fractal
