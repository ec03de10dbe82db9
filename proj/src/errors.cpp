#include "snowlink/errors.hpp"

namespace snowlink {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PatternSpaceTooLarge: return "PatternSpaceTooLarge";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ScopeViolation: return "ScopeViolation";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case ErrorKind::Unidentifiable: return "Unidentifiable";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OscillationDetected: return "OscillationDetected";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace snowlink
