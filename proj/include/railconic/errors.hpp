#pragma once

#include <stdexcept>
#include <string>

namespace railconic {

/// Malformed or inconsistent input data (files, parameters, dimensions).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Instance rejected before solving because no trajectory can meet the
/// requested journey time.
class InfeasibleTimeError : public std::runtime_error {
 public:
  explicit InfeasibleTimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace railconic
