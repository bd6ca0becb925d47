#pragma once

#include <stdexcept>
#include <string>

namespace onebit {

/// A matrix that must be inverted is singular or numerically so.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exhaustive enumeration was asked to visit more than its guard allows.
class SearchSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or incomplete experiment configuration. `where` is
/// "<source>:<line>" so callers can print it verbatim.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what) {}
};

/// Training loss blew past the divergence guard.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace onebit
