#pragma once

#include <stdexcept>
#include <string>

namespace boxcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the occupancy quantile set of a sample is empty.
class QuantileError : public Error {
 public:
  explicit QuantileError(const std::string& what) : Error(what) {}
};

}  // namespace boxcast
