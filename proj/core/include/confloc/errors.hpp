#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace confloc {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the room or two points coincide.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (shapes, lengths, file contents).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite failed to factorize.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Auto-PSD estimate fell below the floor at one or more frequency bins.
class DegenerateBinError : public Error {
 public:
  DegenerateBinError(const std::string& what, std::vector<int> bins)
      : Error(what), bins_(std::move(bins)) {}

  const std::vector<int>& bins() const noexcept { return bins_; }

 private:
  std::vector<int> bins_;
};

/// All pairwise feature distances of a node are zero.
class DegenerateManifoldError : public Error {
 public:
  using Error::Error;
};

}  // namespace confloc
