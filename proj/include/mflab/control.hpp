#pragma once

// Finite control families, payoff functionals on empirical laws, value
// estimation with common random numbers, and epsilon-optimal selection.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mflab/feedback.hpp"
#include "mflab/sim.hpp"
#include "mflab/stats.hpp"

namespace mflab {

/// Indexed family of control tuples. A tuple of size one is shared by every
/// particle; longer tuples are assigned cyclically by particle slot.
class ControlFamily {
 public:
  explicit ControlFamily(std::vector<ControlTuple> members);
  static ControlFamily shared(std::vector<FeedbackControl> controls);

  std::size_t size() const { return members_.size(); }
  const ControlTuple& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<ControlTuple>& members() const { return members_; }

 private:
  std::vector<ControlTuple> members_;
};

/// Bounded test function on the first mode used by the payoff catalog.
class TestFunction {
 public:
  /// one, clipped_square (min(x^2, clip)), tanh, cos.
  explicit TestFunction(std::string name, double clip = 0.0);
  double operator()(double x) const;
  double sup_abs() const;
  const std::string& name() const { return name_; }
  double clip() const { return clip_; }

 private:
  enum class Kind { one, clipped_square, tanh, cos } kind_;
  std::string name_;
  double clip_;
};

/// psi(mu) = offset + sum_i w_i g(atom_i); linear in the law, so the value of
/// a mixture is the mixture of values.
class Psi {
 public:
  /// ||x(T)||^r; GrowthViolation when r > q.
  static Psi terminal_moment(double r, double q);
  /// phi(x_1(T)).
  static Psi terminal_mean_payoff(TestFunction phi);
  /// Trapezoidal integral of phi(x_1(t)) over [0, T].
  static Psi running_integral(TestFunction phi);

  Psi shifted(double c) const;

  double per_atom(const PathSample& path) const;
  double operator()(const EmpiricalLaw& mu) const;
  /// C with |psi(mu)| <= C (1 + ||mu||_q^q).
  double growth_constant(double T) const;
  double offset() const { return offset_; }
  std::string describe() const;

 private:
  enum class Kind { terminal_moment, terminal_mean_payoff, running_integral };
  Psi(Kind kind, double r, TestFunction phi) : kind_(kind), r_(r), phi_(std::move(phi)) {}

  Kind kind_;
  double r_ = 2.0;
  TestFunction phi_{"one"};
  double offset_ = 0.0;
};

/// Evaluates the control on sampled histories, then again after overwriting
/// every column after t; fails if any output bit changes.
ConditionReport check_control_predictability(const FeedbackControl& control,
                                             const ProbeSampler& sampler, std::size_t n_samples);

struct ValueProblem {
  const CoefficientModel& model;
  std::span<const double> lambdas;
  std::vector<double> x0;
  std::size_t n_particles;  // 0 selects the mean-field (MKV) value
  Psi psi;
};

struct ValueReport {
  std::vector<Estimate> estimates;
  /// Per-control samples underlying the estimates (per replication for
  /// n > 0, per mean-field atom for n = 0); index-aligned across controls.
  std::vector<std::vector<double>> samples;
  std::size_t argmax = 0;
  double sup = 0.0;
  std::uint64_t seed = 0;

  /// Standard error of v_i - v_j from the paired samples.
  double paired_se(std::size_t i, std::size_t j) const;
};

ValueReport value_estimate(const ValueProblem& problem, const ControlFamily& family,
                           const SimConfig& cfg);

struct EpsilonCertificate {
  std::size_t index = 0;     // chosen control
  std::size_t argmax = 0;    // empirical maximizer
  double gap = 0.0;          // sup - v_index
  double mc_error = 0.0;     // 2 paired standard errors against the argmax
  double certified_eps = 0.0;  // gap + mc_error
  double estimate_se = 0.0;  // standard error of v_index itself
};

/// Lowest-index control with gap + 2 paired SE <= eps. Throws
/// InconclusiveAtBudget when the family-wide Monte-Carlo error (max paired
/// 2 SE against the argmax) exceeds eps / 2.
EpsilonCertificate epsilon_optimal(const ValueReport& report, double eps);
EpsilonCertificate epsilon_optimal(const ValueProblem& problem, const ControlFamily& family,
                                   double eps, const SimConfig& cfg);

}  // namespace mflab
