#pragma once

#include <stdexcept>
#include <string>

namespace apu {

/// Invalid experiment configuration (bad key, bad value, schema violation).
/// CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unusable input data (parse failures, empty sets, bad splits).
/// CLI maps this to exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a non-finite risk or gradient.  CLI exit code 4.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace apu
