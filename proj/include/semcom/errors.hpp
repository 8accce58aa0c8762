#ifndef SEMCOM_ERRORS_HPP
#define SEMCOM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace semcom {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 2, DataError -> 3, NumericError -> 4.

// Invalid configuration value or inconsistent settings.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated an operation's precondition.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Tensor shape mismatch inside a primitive; message names the operation.
class ShapeError : public ContractError {
 public:
  explicit ShapeError(const std::string& msg) : ContractError(msg) {}
};

// Malformed input data (dataset files, checkpoints, config text).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or other numeric breakdown.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure (unreadable input, unwritable output).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semcom

#endif  // SEMCOM_ERRORS_HPP
