#pragma once

// Convergence studies over particle counts: propagation of chaos, value
// convergence, Hausdorff distance between attainable-law sets, the
// G-Brownian-motion demo, and time-step refinement.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mflab/control.hpp"
#include "mflab/sim.hpp"
#include "mflab/stats.hpp"

namespace mflab {

struct StudyRow {
  double n = 0.0;  // particle count (or number of steps for refinement)
  double stat = 0.0;
  double se = 0.0;
  std::vector<std::pair<std::string, double>> extras;

  double extra(const std::string& key) const;
};

struct ConvergenceStudy {
  std::string name;
  std::string x_label = "n";  // the fit regresses log stat on log x_label
  std::vector<StudyRow> rows;
  std::optional<LinearFit> fit;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> meta;
};

/// Fits log stat against log x over rows with stat > 0 (x = n, or dt when
/// x_label is "dt"); leaves the fit empty with fewer than 3 usable rows.
void fit_slope(ConvergenceStudy& study);

/// Throws InvalidArgument unless ns is nonempty and strictly increasing.
void require_increasing(const std::vector<std::size_t>& ns);

struct PocOptions {
  double q = 2.0;
  /// Draw the n particles on the mean-field noise keys instead of fresh
  /// particle keys (diagnostic: with n = M and no interaction the empirical
  /// law coincides with the mean-field law).
  bool shared_draw = false;
};

/// Per n: mean over replications of w_q(X_n, P)^q, P the (subsampled)
/// mean-field law. Extras: mixture = stat^(1/q), its delta-method SE.
ConvergenceStudy poc_study(const Dynamics& dyn, const ControlTuple& control,
                           const std::vector<double>& x0, const std::vector<std::size_t>& ns,
                           const SimConfig& cfg, PocOptions options = {},
                           const EmpiricalLaw* mean_field = nullptr);

/// Per n: |sup over the family of the n-particle value - sup of the
/// mean-field value|.
ConvergenceStudy value_convergence_study(const Dynamics& dyn, const ControlFamily& family,
                                         const Psi& psi, const std::vector<double>& x0,
                                         const std::vector<std::size_t>& ns,
                                         const SimConfig& cfg);

struct HausdorffOptions {
  double q = 2.0;
  /// Diagnostic: compare the mean-field set with itself.
  bool identical_sets = false;
};

/// Per n: Hausdorff distance (lifted w_q) between {mixture over replications
/// of delta at the n-particle empirical law : c in family} and {delta at the
/// mean-field law : c in family}. Extras carry both one-sided terms.
ConvergenceStudy hausdorff_study(const Dynamics& dyn, const ControlFamily& family,
                                 const std::vector<double>& x0,
                                 const std::vector<std::size_t>& ns, const SimConfig& cfg,
                                 HausdorffOptions options = {});

struct MeanFieldSup {
  double x0;
  double sup;
  double se;
  std::size_t argmax;
};

struct GbmDemoResult {
  ConvergenceStudy study;            // max over x0 of the value gap per n
  std::vector<MeanFieldSup> mean_field;  // one entry per x0
};

/// Sublinear-expectation demo: E_n = sup over the family of (1/n) sum_k
/// E[phi(X^k_T)], E_0 the mean-field counterpart; the statistic is
/// max over x0 of |E_n - E_0|.
GbmDemoResult gbm_demo(const GBMDriftModel& model, const ControlFamily& family,
                       const TestFunction& phi, const std::vector<double>& x0_list,
                       const std::vector<std::size_t>& ns, const SimConfig& cfg);

/// Clip level for the clipped-square payoff that the GBM terminal value
/// exceeds with negligible probability: (|x0| + 6 sqrt(a_high T))^2.
double gbm_default_clip(double x0_abs_max, double a_high, double T);

/// Weak error of the terminal second moment against the finest grid, with
/// noise coupled across grids. `steps` must be increasing with each entry
/// dividing the last. Rows are indexed by steps; extras carry dt, the
/// estimate and (if given) the error against `closed_form`. The fit is on
/// log error against log dt over the non-finest grids.
ConvergenceStudy dt_refinement(const Dynamics& dyn, const ControlTuple& control,
                               const std::vector<double>& x0, const std::vector<std::size_t>& steps,
                               std::size_t n_particles, const SimConfig& cfg,
                               std::optional<double> closed_form = std::nullopt);

}  // namespace mflab
