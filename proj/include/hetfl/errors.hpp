#pragma once

#include <stdexcept>
#include <string>

namespace hetfl {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto exit codes (validation-like errors -> 1, everything else -> 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// backward() without a matching forward(), and similar call-order problems.
class StateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Failure inside a federation run, tagged with the round and client.
class RunError : public Error {
 public:
  using Error::Error;
};

}  // namespace hetfl
