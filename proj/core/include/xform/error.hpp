#pragma once

#include <stdexcept>
#include <string>

namespace xform {

/// Base class of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument, configuration value, or malformed input file.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A request that is well formed but cannot be satisfied (e.g. too few
/// distinct policy instances).
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// A training loop hit a non-finite value or otherwise had to stop.
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace xform
