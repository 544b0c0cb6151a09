#pragma once

#include <stdexcept>
#include <string>

namespace udn {

// Invalid configuration or violated call contract (shape mismatch, bad flag,
// incompatible generator). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf produced by a numeric op, or a divergence guard tripped.
// CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace udn
