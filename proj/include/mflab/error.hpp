#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mflab {

enum class ErrorKind {
  ConstraintViolation,
  DimensionMismatch,
  QuadratureUnstable,
  SizeCapExceeded,
  EmptySet,
  NotDeclared,
  GrowthViolation,
  InconclusiveAtBudget,
  NonFiniteState,
  PicardNoConvergence,
  DegenerateFit,
  InvalidArgument,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the mean-field solver when the iteration cap is hit; keeps the
/// distance trace so it can still be reported.
class PicardNoConvergence : public Error {
 public:
  PicardNoConvergence(const std::string& what, std::vector<double> trace)
      : Error(ErrorKind::PicardNoConvergence, what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace mflab
