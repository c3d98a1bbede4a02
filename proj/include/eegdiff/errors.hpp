#pragma once

#include <stdexcept>
#include <string>

namespace eegdiff {

// Malformed or inconsistent input data (files, markers, channel sets).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or unknown configuration keys/values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure during training or sampling (non-finite values).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eegdiff
