#pragma once

#include <stdexcept>
#include <string>

namespace pma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. `key()` names the offending field
/// when one is known (dotted path, e.g. "adversary.confidence_threshold").
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Argument with the wrong shape or out-of-domain value.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A model could not be trained on the supplied data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for this model kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace pma
