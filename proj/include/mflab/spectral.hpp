#pragma once

// Truncated spectral model of the state space: K modes with decay rates
// lambda_k, mode constants c_k, and the standing integrability constants.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mflab {

struct FrameworkConstants {
  double alpha;
  double p;
  double q;
  double rho;
  double T;
};

/// Checks alpha in (0, 1/2), p > 1/alpha, 1 <= q < p, 0 < rho < 1 - 2/p and
/// T > 0, in that order. Throws ConstraintViolation naming the first
/// inequality that fails.
FrameworkConstants validate_constants(double alpha, double p, double q, double rho, double T);

/// Non-throwing variant of the same predicate; returns the name of the first
/// violated inequality, or nothing when the tuple is admissible.
std::optional<std::string> constants_violation(double alpha, double p, double q, double rho,
                                               double T);

enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict v);

struct ConditionReport {
  Verdict verdict = Verdict::pass;
  std::optional<std::size_t> witness;       // sample (or mode) index of a violation
  std::optional<std::size_t> witness_mode;  // mode index, for per-mode checks
  double partial_sum = 0.0;
  double tail_bound = 0.0;
  double statistic = 0.0;  // max observed ratio / constant / distance
  std::string detail;
};

class SpectralSpace {
 public:
  SpectralSpace(std::vector<double> lambdas, std::vector<double> c_bounds,
                FrameworkConstants constants, double riesz_low = 1.0, double riesz_high = 1.0);

  std::size_t K() const { return lambdas_.size(); }
  std::span<const double> lambdas() const { return lambdas_; }
  std::span<const double> c_bounds() const { return c_bounds_; }
  double riesz_low() const { return riesz_low_; }
  double riesz_high() const { return riesz_high_; }
  bool orthonormal() const { return riesz_low_ == 1.0 && riesz_high_ == 1.0; }
  const FrameworkConstants& constants() const { return constants_; }

 private:
  std::vector<double> lambdas_;
  std::vector<double> c_bounds_;
  double riesz_low_;
  double riesz_high_;
  FrameworkConstants constants_;
};

/// Expands a mode-sequence spec into K values. Accepts either an explicit
/// comma-separated list of K numbers or a generator product such as
/// "k^2*pi^2", "0.5*k^-1" or "1e-12" (a constant).
std::vector<double> expand_mode_sequence(std::string_view spec, std::size_t K);

/// Truncated sum of c_k^2 lambda_k^-rho plus a power-law extrapolation of the
/// tail fitted on the last K/4 terms.
ConditionReport summation_condition(const SpectralSpace& space);

std::vector<double> semigroup_apply(const SpectralSpace& space, double t,
                                    std::span<const double> coeffs);

double kappa(const SpectralSpace& space, double t, double C = 1.0);

struct QuadratureResult {
  double value;
  double error_estimate;
  std::size_t nodes;
};

/// Integral of (kappa(s) / s^alpha)^2 over [0, T] on the graded mesh
/// s_j = T (j/N)^(1/(1-2 alpha)), refined by doubling until two successive
/// Simpson estimates agree.
QuadratureResult dz_integral(const SpectralSpace& space, double alpha, double C = 1.0);

struct HNorm {
  double value;  // Euclidean norm of the coefficients
  double lower;  // bracket on the true norm for a Riesz basis
  double upper;
};

HNorm h_norm(const SpectralSpace& space, std::span<const double> coeffs);

}  // namespace mflab
