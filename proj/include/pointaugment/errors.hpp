#pragma once

#include <stdexcept>
#include <string>

namespace pointaugment {

/// Bad argument values: wrong shapes, non-finite coordinates, empty inputs.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration: width mismatches, unknown keys, bad toggles.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dataset or checkpoint ingestion failure. The message names the offending entry.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training stopped because a loss or parameter became non-finite.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pointaugment
