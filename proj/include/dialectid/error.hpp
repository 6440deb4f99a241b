#pragma once

#include <stdexcept>
#include <string>

namespace dialectid {

// Bad or missing configuration: flags, config files, credentials, templates.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or insufficient input data: manifests, rule files, predictions.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dialectid
