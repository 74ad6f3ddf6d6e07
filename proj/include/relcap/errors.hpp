#pragma once

#include <stdexcept>
#include <string>

namespace relcap {

// Exit-code families used by the CLI: config 2, data 3, internal 4.

/// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (dataset files, predictions, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or internal invariant was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Tensor shapes do not agree.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// An index (class id, word id, region id) is out of range.
class IndexError : public ContractError {
 public:
  using ContractError::ContractError;
};

}  // namespace relcap
