#pragma once

#include <stdexcept>
#include <string>

namespace infboost {

// Malformed or inconsistent input data (files, shapes, labels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: missing, conflicting or out-of-range parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values produced during training or prediction.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace infboost
