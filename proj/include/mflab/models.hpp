#pragma once

// Coefficient pairs (drift, diagonal volatility) in mode coordinates, the
// built-in models, and sampled checkers for growth, mode bounds, Lipschitz
// continuity, convexity and predictability.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mflab/pathspace.hpp"
#include "mflab/spectral.hpp"

namespace mflab {

/// A point of the action space F = [0,1]^m.
struct ControlPoint {
  std::vector<double> f;

  ControlPoint() : f{0.0} {}
  explicit ControlPoint(double value) : f{value} {}
  explicit ControlPoint(std::vector<double> values);

  std::size_t dim() const { return f.size(); }
  double operator[](std::size_t i) const { return f[i]; }
};

/// Summary statistics of the (stopped) law that a model's coefficients read.
using LawStats = std::vector<double>;

class CoefficientModel {
 public:
  virtual ~CoefficientModel() = default;

  virtual std::string_view type() const = 0;
  virtual std::size_t modes() const = 0;
  virtual std::size_t control_dim() const { return 1; }
  /// False when the coefficients never read the law (no interaction).
  virtual bool law_dependent() const = 0;

  /// Statistics of `law` that the coefficients at node `step` need. Must read
  /// only columns <= step, which is what makes the model predictable in the
  /// law argument.
  virtual LawStats law_stats(std::size_t step, const EmpiricalLaw& law) const = 0;

  /// Drift and volatility diagonal at node `step`; `history` is read only at
  /// columns <= step.
  virtual void coefficients(const ControlPoint& f, std::size_t step, const PathSample& history,
                            const LawStats& stats, std::span<double> drift,
                            std::span<double> vol) const = 0;

  virtual double declared_growth() const = 0;
  virtual std::optional<double> declared_lipschitz() const = 0;
  virtual std::vector<double> declared_mode_bounds() const = 0;

  std::vector<double> drift(const ControlPoint& f, std::size_t step, const PathSample& history,
                            const EmpiricalLaw& law) const;
  std::vector<double> vol_diag(const ControlPoint& f, std::size_t step, const PathSample& history,
                               const EmpiricalLaw& law) const;
};

using ModelPtr = std::shared_ptr<const CoefficientModel>;

/// Bounded Lipschitz scalar functions selectable by name: tanh,
/// clipped_identity (clip at +-param), constant (value param), zero.
class ScalarFunction {
 public:
  ScalarFunction(std::string name, double param = 0.0);
  double operator()(double x) const;
  double sup_abs() const;
  double lipschitz() const;
  const std::string& name() const { return name_; }
  double param() const { return param_; }

 private:
  enum class Kind { tanh, clipped_identity, constant } kind_;
  std::string name_;
  double param_;
};

/// One mode with (almost) no linear part: drift E^mu[h(X_t)] and volatility
/// sqrt(a_low + f (a_high - a_low)).
class GBMDriftModel final : public CoefficientModel {
 public:
  GBMDriftModel(double a_low, double a_high, ScalarFunction h);

  std::string_view type() const override { return "gbm_drift"; }
  std::size_t modes() const override { return 1; }
  bool law_dependent() const override;
  LawStats law_stats(std::size_t step, const EmpiricalLaw& law) const override;
  void coefficients(const ControlPoint& f, std::size_t step, const PathSample& history,
                    const LawStats& stats, std::span<double> drift,
                    std::span<double> vol) const override;
  double declared_growth() const override;
  std::optional<double> declared_lipschitz() const override;
  std::vector<double> declared_mode_bounds() const override;

  double a_low() const { return a_low_; }
  double a_high() const { return a_high_; }
  const ScalarFunction& h() const { return h_; }
  double volatility(double f) const;

  /// Eigenvalue used for the single mode; positive but treated as zero by
  /// the integrator.
  static constexpr double kLambda = 1e-12;

 private:
  double a_low_;
  double a_high_;
  ScalarFunction h_;
};

/// Interaction g(x, m, f) for the heat model, bounded by 1 and 1-Lipschitz
/// in each of x and m: tanh_attract = tanh(m - x), controlled_attract =
/// f tanh(m - x), sin_mean = sin(m), zero.
class InteractionFunction {
 public:
  explicit InteractionFunction(std::string name);
  double operator()(double x, double m, double f) const;
  bool reads_law() const;
  const std::string& name() const { return name_; }

 private:
  enum class Kind { tanh_attract, controlled_attract, sin_mean, zero } kind_;
  std::string name_;
};

/// Mean-field heat equation on (0,1): lambda_k = k^2 pi^2, drift
/// c_k g(x_k, m_k, f) with m_k the law mean of mode k, and volatility
/// c_k sqrt(v_low + f (v_high - v_low)), so both the drift and the variance
/// are affine in f. Mode amplitudes c_k = c_scale / k.
class HeatMeanFieldModel final : public CoefficientModel {
 public:
  HeatMeanFieldModel(std::size_t K, double c_scale, InteractionFunction g, double v_low,
                     double v_high);

  std::string_view type() const override { return "heat_meanfield"; }
  std::size_t modes() const override { return amplitudes_.size(); }
  bool law_dependent() const override { return g_.reads_law(); }
  LawStats law_stats(std::size_t step, const EmpiricalLaw& law) const override;
  void coefficients(const ControlPoint& f, std::size_t step, const PathSample& history,
                    const LawStats& stats, std::span<double> drift,
                    std::span<double> vol) const override;
  double declared_growth() const override;
  std::optional<double> declared_lipschitz() const override;
  std::vector<double> declared_mode_bounds() const override;

  static std::vector<double> eigenvalues(std::size_t K);
  const std::vector<double>& amplitudes() const { return amplitudes_; }

 private:
  std::vector<double> amplitudes_;
  InteractionFunction g_;
  double v_low_;
  double v_high_;
};

/// Per-mode linear coefficients b_k = beta - theta x_k, sigma_k = s, no law
/// dependence. Used for integrator validation against Ornstein-Uhlenbeck
/// closed forms.
class LinearModel final : public CoefficientModel {
 public:
  LinearModel(std::size_t K, double beta, double theta, double s);

  std::string_view type() const override { return "linear"; }
  std::size_t modes() const override { return K_; }
  bool law_dependent() const override { return false; }
  LawStats law_stats(std::size_t, const EmpiricalLaw&) const override { return {}; }
  void coefficients(const ControlPoint& f, std::size_t step, const PathSample& history,
                    const LawStats& stats, std::span<double> drift,
                    std::span<double> vol) const override;
  double declared_growth() const override;
  std::optional<double> declared_lipschitz() const override { return theta_; }
  std::vector<double> declared_mode_bounds() const override;

  double beta() const { return beta_; }
  double theta() const { return theta_; }
  double s() const { return s_; }

  /// E[X_T^2] for one mode with decay lambda started at x0, exact dynamics.
  double second_moment(double lambda, double x0, double T) const;

 private:
  std::size_t K_;
  double beta_;
  double theta_;
  double s_;
};

// ---- checkers -------------------------------------------------------------

struct ProbeSample {
  ControlPoint f;
  std::size_t step;
  PathSample history;
  EmpiricalLaw law;
};

struct ProbePair {
  ControlPoint f;
  std::size_t step;
  PathSample omega;
  EmpiricalLaw mu;
  PathSample alpha;
  EmpiricalLaw nu;
};

using ProbeSampler = std::function<ProbeSample(std::size_t index)>;
using PairSampler = std::function<ProbePair(std::size_t index)>;

struct ProbeOptions {
  TimeGrid grid{1.0, 16};
  std::size_t max_atoms = 6;
  double scale = 1.0;  // standard deviation of random path increments
  std::uint64_t seed = 1;
};

/// Random (f, t, history, law) tuples: Gaussian random-walk paths started
/// near zero with `scale`-sized increments, laws with 1..max_atoms atoms.
ProbeSampler make_probe_sampler(const CoefficientModel& model, ProbeOptions options);
PairSampler make_pair_sampler(const CoefficientModel& model, ProbeOptions options);

ConditionReport check_growth(const CoefficientModel& model, const SpectralSpace& space,
                             const ProbeSampler& sampler, std::size_t n_samples);

ConditionReport check_mode_bounds(const CoefficientModel& model, const SpectralSpace& space,
                                  const ProbeSampler& sampler, std::size_t n_samples);

ConditionReport check_lipschitz(const CoefficientModel& model, const SpectralSpace& space,
                                const PairSampler& sampler, std::size_t n_pairs);

struct ConvexityOptions {
  std::size_t n_pairs = 200;
  double tol_factor = 1e-3;  // tolerance = tol_factor * scale of the image
  std::uint64_t seed = 1;
};

/// Sampled midpoint test for convexity of {(b, sigma sigma*)(f)} at a fixed
/// (t, history, law). For m = 1 the image of the grid is treated as a
/// polyline; otherwise distances are to the nearest grid image point.
ConditionReport check_convexity(const CoefficientModel& model, const ProbeSample& point,
                                const std::vector<ControlPoint>& f_grid,
                                ConvexityOptions options = {});

/// Uniform grid of `points` values on F = [0,1] (m = 1).
std::vector<ControlPoint> uniform_control_grid(std::size_t points);

/// Mutates the history after t and replaces the law by its stopped version;
/// fails if any output bit changes.
ConditionReport check_predictability(const CoefficientModel& model, const ProbeSampler& sampler,
                                     std::size_t n_samples);

}  // namespace mflab
