#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace netval {

enum class ErrorKind {
  invalid_input,   // violates a documented precondition or model invariant
  schema,          // malformed file or JSON/CSV schema violation
  not_found,       // missing input file
  infeasible,      // calibration or ratio targets cannot be met
  model,           // endowment model misbehaves (non-monotone, non-integrable)
  internal,        // broken internal invariant
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Structural violation of the network invariants. `bank()` is 0-based;
/// messages use 1-based labels.
class NetworkError : public Error {
 public:
  NetworkError(std::optional<std::size_t> bank, const std::string& message)
      : Error(ErrorKind::invalid_input, message), bank_(bank) {}

  std::optional<std::size_t> bank() const noexcept { return bank_; }

 private:
  std::optional<std::size_t> bank_;
};

}  // namespace netval
