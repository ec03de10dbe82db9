#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace snowlink {

enum class ErrorKind {
  PatternSpaceTooLarge,
  ParseError,
  InvariantViolation,
  DimensionMismatch,
  ScopeViolation,
  DomainError,
  NonFiniteLikelihood,
  Unidentifiable,
  DegenerateDenominator,
  NoConvergence,
  OscillationDetected,
  SingularMatrix,
  InsufficientData,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // message without the kind prefix
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace snowlink
