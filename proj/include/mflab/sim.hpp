#pragma once

// Exponential-Euler integration of controlled mild solutions mode by mode:
// the n-particle system, the McKean-Vlasov Picard solver, the synchronous
// coupling experiment, and moment / increment diagnostics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mflab/feedback.hpp"
#include "mflab/models.hpp"
#include "mflab/noise.hpp"
#include "mflab/pathspace.hpp"
#include "mflab/stats.hpp"

namespace mflab {

struct SimConfig {
  TimeGrid grid{1.0, 20};
  std::size_t replications = 32;
  std::size_t mkv_population = 512;
  std::size_t picard_max_iters = 30;
  double picard_tol = 1e-3;  // in w_p
  double p = 2.0;            // exponent of the Picard stopping metric
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t ot_cap = kDefaultOtCap;
};

/// Throws InvalidArgument unless R >= 1, M >= 2, picard_tol > 0.
void validate(const SimConfig& cfg);

/// x' = e^{-lambda dt} x + phi1 b + sqrt(phi2) s z, with the lambda -> 0
/// limits phi1 = phi2 = dt below 1e-8.
double step_mode(double lambda, double dt, double x, double b, double s, double z);

/// Which noise keys a system draws from: (domain, replication), with the
/// particle slot and mode supplied per variate.
struct NoiseKey {
  NoiseDomain domain = NoiseDomain::particles;
  std::uint32_t replication = 0;
  /// >1 aggregates that many fine-grid variates per step (dt refinement).
  std::uint32_t substeps = 1;
  /// Particle i draws from slot first_slot + i; lets independent blocks of
  /// one population be integrated separately.
  std::uint32_t first_slot = 0;
};

struct Dynamics {
  const CoefficientModel& model;
  std::span<const double> lambdas;
};

/// Integrates n particles from x0 (one K-vector shared by all, or n*K values
/// particle-major). With `frozen_law` null the particles interact through
/// their own stopped empirical law; otherwise every particle reads
/// `frozen_law` and the particles are independent.
EmpiricalLaw integrate_system(const Dynamics& dyn, const ControlTuple& controls,
                              std::span<const double> x0, std::size_t n, const TimeGrid& grid,
                              const NoiseStream& noise, NoiseKey key,
                              const EmpiricalLaw* frozen_law = nullptr);

struct SystemDraw {
  EmpiricalLaw paths;
  std::uint32_t replication = 0;

  /// Stopped empirical law at node j.
  EmpiricalLaw law_at(std::size_t step) const;
};

SystemDraw simulate_particles(const Dynamics& dyn, const ControlTuple& controls,
                              std::span<const double> x0, std::size_t n, const SimConfig& cfg,
                              std::uint32_t replication);

/// R replications in parallel (cfg.threads), returned in replication order.
std::vector<SystemDraw> simulate_replications(const Dynamics& dyn, const ControlTuple& controls,
                                              std::span<const double> x0, std::size_t n,
                                              const SimConfig& cfg);

struct MkvResult {
  EmpiricalLaw law;
  std::vector<double> trace;  // w_p(law^i, law^{i-1}) per iteration
  std::size_t iterations = 0;
};

/// Picard iteration on the flow of laws with M independent copies against
/// the previous iterate; identical noise keys every iteration.
MkvResult solve_mkv(const Dynamics& dyn, const ControlTuple& controls,
                    std::span<const double> x0, const SimConfig& cfg);

/// Seeded subsample of a law to at most cfg.ot_cap atoms, used whenever a
/// Wasserstein distance against a large population is evaluated. The same
/// cfg always selects the same indices.
EmpiricalLaw capped_law(const EmpiricalLaw& law, const SimConfig& cfg);

/// The deterministic path S_t x0 at the grid nodes.
PathSample semigroup_flow(std::span<const double> lambdas, std::span<const double> x0,
                          const TimeGrid& grid);

struct CouplingReport {
  double lhs = 0.0;  // mean over replications of w_p(X_n(Y), P)^p
  double rhs = 0.0;  // mean over replications of w_p(X_n(Z), P)^p
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double dx_term = 0.0;  // |x0_n - x0_0|^p
  std::vector<double> lhs_samples;
  std::vector<double> rhs_samples;
};

/// Z: n independent copies against `mean_field` started at x0_0; Y: the
/// interacting system started at x0_n on the same noise keys.
CouplingReport synchronous_coupling(const Dynamics& dyn, const ControlTuple& controls,
                                    std::span<const double> x0_n, std::span<const double> x0_0,
                                    std::size_t n, const EmpiricalLaw& mean_field,
                                    const SimConfig& cfg);

/// (1/n) sum_k E[sup_norm(X^k, T)^p] with the standard error across draws
/// (across particles when there is a single draw).
Estimate moment_report(const std::vector<SystemDraw>& draws, double p);

struct IncrementReport {
  std::vector<double> lags;   // in time units
  std::vector<double> means;  // (1/n) sum_k E|X_t - X_s|^p over pairs at that lag
  std::optional<LinearFit> fit;  // log mean against log lag; empty when degenerate
  bool degenerate = false;
};

/// Throws DegenerateFit with fewer than 3 lags; flags (without throwing)
/// when some mean is zero.
IncrementReport increment_report(const std::vector<SystemDraw>& draws, double p,
                                 std::span<const std::size_t> lag_steps);

}  // namespace mflab
