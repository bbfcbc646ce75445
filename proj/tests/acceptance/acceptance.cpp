// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "mflab/analysis.hpp"
#include "mflab/config.hpp"
#include "mflab/error.hpp"
#include "mflab/io.hpp"
#include "mflab/spectral.hpp"

using namespace mflab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string config_path(const char* name) { return std::string(MFLAB_CONFIG_DIR) + "/" + name; }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

PathSample random_path(std::mt19937_64& rng, const TimeGrid& g, std::size_t K) {
  std::normal_distribution<double> z;
  std::vector<double> d(g.nodes() * K);
  for (auto& x : d) x = z(rng);
  return PathSample(g, K, std::move(d));
}

EmpiricalLaw random_law(std::mt19937_64& rng, const TimeGrid& g, std::size_t K, std::size_t n) {
  std::vector<PathSample> atoms;
  for (std::size_t i = 0; i < n; ++i) atoms.push_back(random_path(rng, g, K));
  return EmpiricalLaw(std::move(atoms));
}

double brute_force_w(const EmpiricalLaw& mu, const EmpiricalLaw& nu, double p) {
  std::vector<std::size_t> perm(mu.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      s += std::pow(sup_norm(mu.atom(i) - nu.atom(perm[i]), mu.grid().T()), p);
    }
    best = std::min(best, s / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

double pooled_se(double a, double b) { return std::sqrt(a * a + b * b); }

// ---- criteria --------------------------------------------------------------

Outcome ot_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const TimeGrid g(1.0, 1 + trial % 3);
    const std::size_t K = 1 + (trial / 3) % 2, n = 1 + (trial / 6) % 6;
    const double p = 1.0 + (trial % 4) * 0.5;
    const EmpiricalLaw mu = random_law(rng, g, K, n), nu = random_law(rng, g, K, n);
    worst = std::max(worst, std::abs(wasserstein_paths(mu, nu, p) - brute_force_w(mu, nu, p)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0,
          "500 pairs, max |w - brute force| = " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome metric_axioms() {
  std::mt19937_64 rng(77);
  const TimeGrid g(1.0, 3);
  bool symmetric = true;
  double worst_triangle = -INFINITY;
  auto triangle = [&](double ab, double ac, double cb) {
    worst_triangle = std::max(worst_triangle, ab - ac - cb);
  };
  auto law = [&](std::size_t n) {
    return std::make_shared<const EmpiricalLaw>(random_law(rng, g, 2, n));
  };
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 1 + trial % 5, nb = 1 + (trial + 1) % 7, nc = 1 + (trial + 3) % 4;
    const EmpiricalLaw a = random_law(rng, g, 2, na), b = random_law(rng, g, 2, nb),
                       c = random_law(rng, g, 2, nc);
    const double ab = wasserstein_paths(a, b, 2.0);
    symmetric = symmetric && ab == wasserstein_paths(b, a, 2.0);
    triangle(ab, wasserstein_paths(a, c, 2.0), wasserstein_paths(c, b, 2.0));

    std::vector<LawPtr> qa, qb, qc;
    for (std::size_t i = 0; i < 1 + trial % 3; ++i) qa.push_back(law(1 + i));
    for (std::size_t i = 0; i < 1 + (trial + 1) % 3; ++i) qb.push_back(law(2 + i % 2));
    for (std::size_t i = 0; i < 1 + (trial + 2) % 2; ++i) qc.push_back(law(1 + i));
    const MetaLaw A = MetaLaw::uniform(qa), B = MetaLaw::uniform(qb), C = MetaLaw::uniform(qc);
    const double mab = wasserstein_meta(A, B, 2.0);
    symmetric = symmetric && mab == wasserstein_meta(B, A, 2.0);
    triangle(mab, wasserstein_meta(A, C, 2.0), wasserstein_meta(C, B, 2.0));
  }
  return {symmetric && worst_triangle <= 1e-9,
          std::string("symmetry ") + (symmetric ? "exact" : "broken") +
              ", worst triangle excess " + fmt(worst_triangle)};
}

Outcome integrator_exactness() {
  const double lambda = 1.7, theta = 0.4, beta = 0.25, s = 0.9;
  const LinearModel model(1, beta, theta, s);
  double worst = 0.0;
  for (double dt : {1e-3, 0.05, 0.3, 1.0}) {
    for (double x : {-1.0, 0.0, 2.5}) {
      const double b = beta - theta * x;
      const double mean = step_mode(lambda, dt, x, b, s, 0.0);
      const double sd = step_mode(lambda, dt, x, b, s, 1.0) - mean;
      const double phi1 = (1.0 - std::exp(-lambda * dt)) / lambda;
      const double phi2 = (1.0 - std::exp(-2.0 * lambda * dt)) / (2.0 * lambda);
      worst = std::max(worst, std::abs(mean - (std::exp(-lambda * dt) * x + phi1 * b)));
      worst = std::max(worst, std::abs(sd * sd - s * s * phi2));
    }
  }
  // Pure OU (drift folded into lambda) so the exponential step is exact.
  const LinearModel ou(1, 0.0, 0.0, s);
  SimConfig cfg;
  cfg.grid = TimeGrid(1.0, 16);
  cfg.replications = 10000;
  cfg.seed = 99;
  const std::vector<double> lambdas{lambda}, x0{1.2};
  const auto draws =
      simulate_replications({ou, lambdas}, {FeedbackControl::constant(0.0)}, x0, 1, cfg);
  std::vector<double> sq;
  for (const auto& d : draws) sq.push_back(std::pow(d.paths.atom(0)(0, 16), 2));
  const Estimate e = mean_estimate(sq);
  const double exact = ou.second_moment(lambda, 1.2, 1.0);
  const double z = std::abs(e.value - exact) / e.std_error;
  return {worst <= 1e-12 && z <= 3.0, "one-step max error " + fmt(worst) + "; E X_T^2 = " +
                                          fmt(e.value) + " vs " + fmt(exact) + " (" + fmt(z) +
                                          " SE)"};
}

Outcome gbm_demo_check() {
  const auto t0 = Clock::now();
  const ExperimentConfig c = load_config(config_path("gbm_demo.ini"));
  const auto& model = dynamic_cast<const GBMDriftModel&>(*c.model);
  const double T = c.constants.T;
  const double clip = gbm_default_clip(1.0, model.a_high(), T);
  const GbmDemoResult r = gbm_demo(model, c.family(), TestFunction("clipped_square", clip),
                                   {1.0}, {8, 128}, c.sim);
  const MeanFieldSup& mf = r.mean_field.front();
  const double oracle = 1.0 + model.a_high() * T;
  const bool sup_ok = std::abs(mf.sup - oracle) <= 3.0 * mf.se;
  const StudyRow& lo = r.study.rows.front();
  const StudyRow& hi = r.study.rows.back();
  const bool gap_ok = hi.stat <= lo.stat + 2.0 * pooled_se(lo.se, hi.se);
  const double secs = seconds_since(t0);
  return {sup_ok && gap_ok && secs <= 600.0,
          "mean-field sup " + fmt(mf.sup) + " +- " + fmt(mf.se) + " vs " + fmt(oracle) +
              "; gap n=8 " + fmt(lo.stat) + " +- " + fmt(lo.se) + ", n=128 " + fmt(hi.stat) +
              " +- " + fmt(hi.se) + "; " + fmt(secs) + " s"};
}

Outcome propagation_of_chaos() {
  const ExperimentConfig c = load_config(config_path("gbm_poc.ini"));
  const ConvergenceStudy s =
      poc_study(c.dynamics(), c.control(), c.x0, {16, 32, 64, 128, 256}, c.sim);
  if (!s.fit) return {false, "no fit"};
  const double ratio = s.rows.back().stat / s.rows.front().stat;
  return {s.fit->slope < 0.0 && s.fit->ci_high < 0.0 && ratio <= 0.5,
          "slope " + fmt(s.fit->slope) + " CI [" + fmt(s.fit->ci_low) + ", " +
              fmt(s.fit->ci_high) + "], stat(256)/stat(16) = " + fmt(ratio)};
}

Outcome increment_exponents() {
  SimConfig cfg;
  cfg.grid = TimeGrid(1.0, 64);
  cfg.replications = 8;
  cfg.seed = 4;
  const std::vector<std::size_t> lags{1, 2, 4, 8, 16};
  const LinearModel bm(1, 0.0, 0.0, 1.0);
  const std::vector<double> zero{0.0};
  const auto bdraws =
      simulate_replications({bm, zero}, {FeedbackControl::constant(0.0)}, zero, 500, cfg);
  const auto p2 = increment_report(bdraws, 2.0, lags);
  const auto p4 = increment_report(bdraws, 4.0, lags);

  const ExperimentConfig heat = load_config(config_path("heat.ini"));
  SimConfig hcfg = heat.sim;
  hcfg.grid = TimeGrid(heat.constants.T, 256);
  hcfg.replications = 8;
  const std::vector<double> rest(heat.lambdas.size(), 0.0);
  const auto hdraws = simulate_replications(heat.dynamics(), heat.control(), rest, 200, hcfg);
  const auto h4 = increment_report(hdraws, 4.0, lags);
  if (!p2.fit || !p4.fit || !h4.fit) return {false, "degenerate increments"};
  const double a = p2.fit->slope, b = p4.fit->slope, h = h4.fit->slope;
  return {a >= 0.9 && a <= 1.1 && b >= 1.8 && b <= 2.2 && h >= 1.0,
          "Brownian p=2 " + fmt(a) + ", p=4 " + fmt(b) + "; heat p=4 " + fmt(h)};
}

Outcome moment_stability() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"gbm_poc.ini", "heat.ini"}) {
    const ExperimentConfig c = load_config(config_path(name));
    SimConfig cfg = c.sim;
    cfg.replications = 16;
    const double p = c.constants.p;
    double lo = INFINITY, hi = 0.0;
    for (std::size_t n : {8, 64, 256}) {
      const double m =
          moment_report(simulate_replications(c.dynamics(), c.control(), c.x0, n, cfg), p).value;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    ok = ok && hi < 2.0 * lo;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(c.model->type()) +
              " max/min " + fmt(hi / lo);
  }
  return {ok, detail};
}

Outcome synchronous_coupling_check() {
  const ExperimentConfig c = load_config(config_path("gbm_poc.ini"));
  const MkvResult mf = solve_mkv(c.dynamics(), c.control(), c.x0, c.sim);
  auto ratio = [&](std::size_t n) {
    const CouplingReport r = synchronous_coupling(c.dynamics(), c.control(), c.x0, c.x0, n, mf.law, c.sim);
    return r.lhs / r.rhs;
  };
  const double C32 = ratio(32), r8 = ratio(8), r128 = ratio(128);
  const bool stable = std::abs(r8 / C32 - 1.0) <= 0.5 && std::abs(r128 / C32 - 1.0) <= 0.5;

  const ExperimentConfig heat = load_config(config_path("heat.ini"));
  const HeatMeanFieldModel off(heat.lambdas.size(), 1.0, InteractionFunction("zero"), 0.5, 1.0);
  const Dynamics dyn{off, heat.lambdas};
  const MkvResult mf0 = solve_mkv(dyn, heat.control(), heat.x0, heat.sim);
  const CouplingReport r0 = synchronous_coupling(dyn, heat.control(), heat.x0, heat.x0, 16, mf0.law, heat.sim);
  const bool exact = r0.lhs_samples == r0.rhs_samples;
  return {stable && exact, "C(32) = " + fmt(C32) + ", lhs/rhs at n=8 " + fmt(r8) + ", n=128 " +
                               fmt(r128) + "; no interaction: " +
                               (exact ? "lhs = rhs bitwise" : "lhs != rhs")};
}

Outcome hausdorff_sanity() {
  const ExperimentConfig c = load_config(config_path("gbm_poc.ini"));
  SimConfig cfg = c.sim;
  cfg.replications = 32;
  const auto fam2 = ControlFamily::shared({FeedbackControl::constant(0.0), FeedbackControl::constant(1.0)});
  HausdorffOptions same;
  same.identical_sets = true;
  bool zero = true;
  for (const auto& row : hausdorff_study(c.dynamics(), fam2, c.x0, {8, 128}, cfg, same).rows) {
    zero = zero && row.stat == 0.0;
  }
  const auto single = ControlFamily::shared({c.controls.front()});
  const auto h1 = hausdorff_study(c.dynamics(), single, c.x0, {8, 32}, cfg);
  const auto p1 = poc_study(c.dynamics(), single[0], c.x0, {8, 32}, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < h1.rows.size(); ++i) {
    worst = std::max(worst, std::abs(h1.rows[i].stat - p1.rows[i].extra("mixture")));
  }
  const auto h2 = hausdorff_study(c.dynamics(), fam2, c.x0, {8, 128}, cfg);
  const StudyRow& lo = h2.rows.front();
  const StudyRow& hi = h2.rows.back();
  const bool shrinks = hi.stat <= lo.stat + 2.0 * pooled_se(lo.se, hi.se);
  return {zero && worst <= 1e-12 && shrinks,
          std::string("identical sets ") + (zero ? "0" : "nonzero") +
              "; singleton vs poc mixture " + fmt(worst) + "; h(8) = " + fmt(lo.stat) + " +- " +
              fmt(lo.se) + ", h(128) = " + fmt(hi.stat) + " +- " + fmt(hi.se)};
}

Outcome condition_checkers() {
  auto verdict = [](double rho) {
    const std::size_t K = 1000;
    std::vector<double> lambdas(K), c(K, 1.0);
    for (std::size_t k = 0; k < K; ++k) lambdas[k] = std::pow(static_cast<double>(k + 1), 2.0);
    // p large enough that rho < 1 - 2/p holds for both rho values.
    const SpectralSpace space(lambdas, c, validate_constants(0.2, 40.0, 2.0, rho, 1.0));
    return summation_condition(space).verdict;
  };
  const bool pass06 = verdict(0.6) == Verdict::pass;
  const bool fail04 = verdict(0.4) == Verdict::fail;

  const double alphas[] = {0.0, 0.0625, 0.125, 0.1875, 0.25, 0.3125, 0.375, 0.4375, 0.5, 0.55};
  const double ps[] = {2, 3, 4, 5, 6, 8, 10, 12, 16, 20};
  const double q = 2.0, rho = 0.5, T = 1.0;
  std::size_t mismatches = 0, accepted = 0;
  for (double a : alphas) {
    for (double p : ps) {
      const bool expected = a > 0.0 && a < 0.5 && p * a > 1.0 && q >= 1.0 && q < p &&
                            rho > 0.0 && rho * p < p - 2.0 && T > 0.0;
      bool got = true;
      try {
        validate_constants(a, p, q, rho, T);
      } catch (const Error&) {
        got = false;
      }
      accepted += got;
      mismatches += got != expected;
    }
  }
  return {pass06 && fail04 && mismatches == 0,
          std::string("rho 0.6 ") + (pass06 ? "passes" : "does not pass") + ", rho 0.4 " +
              (fail04 ? "fails" : "does not fail") + "; constants grid " +
              std::to_string(mismatches) + " mismatches (" + std::to_string(accepted) +
              "/100 admissible)"};
}

Outcome determinism() {
  const ExperimentConfig heat = load_config(config_path("heat.ini"));
  auto run = [&](std::size_t threads) {
    SimConfig cfg = heat.sim;
    cfg.threads = threads;
    cfg.replications = 8;
    std::string out;
    ConvergenceStudy s = poc_study(heat.dynamics(), heat.control(), heat.x0, {8, 16, 32}, cfg);
    s.config_hash = heat.hash;
    out += study_to_json(s).dump(2) + study_csv(s);
    s = hausdorff_study(heat.dynamics(), heat.family(), heat.x0, {8, 16}, cfg);
    out += study_to_json(s).dump(2) + study_csv(s);
    s = value_convergence_study(heat.dynamics(), heat.family(), *heat.psi, heat.x0, {8, 16}, cfg);
    out += study_to_json(s).dump(2) + study_csv(s);
    out += law_csv(solve_mkv(heat.dynamics(), heat.control(), heat.x0, cfg).law, heat.hash);
    return out;
  };
  const std::string a = run(1), b = run(1), c = run(4);
  return {a == b && a == c, std::to_string(a.size()) + " bytes of study output; rerun " +
                                (a == b ? "identical" : "differs") + ", 4 threads " +
                                (a == c ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"optimal transport matches permutation oracle", ot_oracle},
      {"metric axioms", metric_axioms},
      {"integrator exactness", integrator_exactness},
      {"G-Brownian motion demo", gbm_demo_check},
      {"propagation of chaos", propagation_of_chaos},
      {"increment exponents", increment_exponents},
      {"moment stability", moment_stability},
      {"synchronous coupling", synchronous_coupling_check},
      {"Hausdorff study sanity", hausdorff_sanity},
      {"condition checkers", condition_checkers},
      {"determinism", determinism},
  };
  // Optional arguments select criteria by number.
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const std::size_t k = std::strtoul(argv[a], nullptr, 10);
    if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
