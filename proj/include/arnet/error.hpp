#pragma once

#include <stdexcept>
#include <string>

namespace arnet {

// Tensor shapes or arguments that do not conform to an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration values (including the E_A/E_M bottleneck rule).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed files or byte streams: bad magic, truncated payload, wrong codec.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data that parses but cannot be used, e.g. a single-class training set.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arnet
