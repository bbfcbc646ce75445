#include "mflab/error.hpp"

namespace mflab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::QuadratureUnstable: return "QuadratureUnstable";
    case ErrorKind::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::NotDeclared: return "NotDeclared";
    case ErrorKind::GrowthViolation: return "GrowthViolation";
    case ErrorKind::InconclusiveAtBudget: return "InconclusiveAtBudget";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::PicardNoConvergence: return "PicardNoConvergence";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mflab
