#pragma once

#include <stdexcept>
#include <string>

namespace ormachine {

/// Malformed or inconsistent input data (files, datasets, corrupt headers).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerically degenerate request, e.g. estimating dispersion from zero
/// observations.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ormachine
