#pragma once

#include <stdexcept>
#include <string>

namespace nvpm {

/// A precondition of a numerical routine was not met (non-Hermitian input,
/// non-unit axis, coincident positions, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid user configuration. `field()` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A checked numerical invariant (unitarity, trace, signal bounds) failed.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nvpm
