#pragma once

#include <stdexcept>
#include <string>

namespace glrstop {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or input shape (dimension mismatch, bad budget, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A quantity was requested before enough data exist to define it.
class NotReady : public Error {
 public:
  using Error::Error;
};

/// Numerically degenerate input that has no meaningful value.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside the region where its formula holds.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A predetermined data source ran out of entries.
class SourceExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace glrstop
