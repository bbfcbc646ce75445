#include <cmath>

#include "doctest.h"
#include "mflab/error.hpp"
#include "mflab/sim.hpp"

using namespace mflab;

namespace {

SimConfig small_cfg(std::size_t steps = 10) {
  SimConfig cfg;
  cfg.grid = TimeGrid(1.0, steps);
  cfg.replications = 8;
  cfg.mkv_population = 64;
  cfg.picard_tol = 1e-3;
  cfg.seed = 5;
  return cfg;
}

const ControlTuple kHalf{FeedbackControl::constant(0.5)};

}  // namespace

TEST_CASE("exponential Euler step") {
  CHECK(step_mode(0.0, 0.1, 1.0, 0.0, 0.0, 0.0) == 1.0);
  CHECK(step_mode(0.0, 0.1, 1.0, 2.0, 0.0, 0.0) == doctest::Approx(1.2));
  CHECK(step_mode(1.0, 0.1, 1.0, 0.0, 0.0, 0.0) == doctest::Approx(std::exp(-0.1)));
  CHECK(step_mode(2.0, 0.5, 0.0, 1.0, 0.0, 0.0) == doctest::Approx((1.0 - std::exp(-1.0)) / 2.0));
  CHECK(step_mode(2.0, 0.5, 0.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(std::sqrt((1.0 - std::exp(-2.0)) / 4.0)));
  CHECK(step_mode(1e-12, 0.25, 0.0, 0.0, 1.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("zero dynamics stay at the semigroup flow") {
  const LinearModel m(2, 0.0, 0.0, 0.0);
  const std::vector<double> lambdas{1.0, 3.0}, x0{1.0, -2.0};
  const SimConfig cfg = small_cfg();
  const SystemDraw d = simulate_particles({m, lambdas}, kHalf, x0, 3, cfg, 0);
  const PathSample flow = semigroup_flow(lambdas, x0, cfg.grid);
  for (const auto& a : d.paths.atoms()) {
    for (std::size_t j = 0; j < cfg.grid.nodes(); ++j) {
      CHECK(a(0, j) == doctest::Approx(flow(0, j)).epsilon(1e-13));
      CHECK(a(1, j) == doctest::Approx(flow(1, j)).epsilon(1e-13));
    }
  }
}

TEST_CASE("interacting drift reproduces the mean ODE") {
  // No noise, drift = mean of clipped identity: x' = x while |x| < clip.
  const GBMDriftModel m(0.0, 0.0, ScalarFunction("clipped_identity", 100.0));
  const std::vector<double> lambdas{GBMDriftModel::kLambda}, x0{1.0};
  SimConfig cfg = small_cfg(2000);
  const SystemDraw d = simulate_particles({m, lambdas}, kHalf, x0, 2, cfg, 0);
  CHECK(d.paths.atom(0)(0, 2000) == doctest::Approx(std::exp(1.0)).epsilon(1e-3));
  CHECK(d.paths.atom(1)(0, 2000) == d.paths.atom(0)(0, 2000));
}

TEST_CASE("dimension and finiteness errors") {
  const LinearModel m(2, 0.0, 0.0, 1.0);
  const std::vector<double> one{1.0}, two{0.0, 0.0}, three{0.0, 0.0, 0.0};
  const SimConfig cfg = small_cfg();
  CHECK_THROWS_AS(simulate_particles({m, one}, kHalf, two, 2, cfg, 0), Error);
  CHECK_THROWS_AS(simulate_particles({m, std::vector<double>{1.0, 1.0}}, kHalf, three, 2, cfg, 0), Error);
  const LinearModel explode(1, 1e308, 0.0, 0.0);
  try {
    simulate_particles({explode, std::vector<double>{0.0}}, kHalf, std::vector<double>{1.79e308}, 1, cfg, 0);
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteState);
    CHECK(std::string(e.what()).find("step 0 particle 0 mode 0") != std::string::npos);
  }
  SimConfig bad = cfg;
  bad.mkv_population = 1;
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("one-step OU mean and variance") {
  const double lambda = 2.0, theta = 0.5, beta = 0.3, s = 0.7, dt = 0.2, x = 1.1;
  // Drift beta - theta x is frozen at the left endpoint.
  const double b = beta - theta * x;
  const double mean = step_mode(lambda, dt, x, b, s, 0.0);
  CHECK(mean == doctest::Approx(std::exp(-lambda * dt) * x + (1 - std::exp(-lambda * dt)) / lambda * b).epsilon(1e-14));
  const double up = step_mode(lambda, dt, x, b, s, 1.0) - mean;
  CHECK(up * up == doctest::Approx(s * s * (1 - std::exp(-2 * lambda * dt)) / (2 * lambda)).epsilon(1e-13));
}

TEST_CASE("terminal second moment of an OU mode") {
  const LinearModel m(1, 0.0, 0.0, 1.0);
  const std::vector<double> lambdas{1.5}, x0{0.8};
  SimConfig cfg = small_cfg(8);
  cfg.replications = 1;
  const SystemDraw d = simulate_particles({m, lambdas}, kHalf, x0, 20000, cfg, 0);
  std::vector<double> sq;
  for (const auto& a : d.paths.atoms()) sq.push_back(a(0, 8) * a(0, 8));
  const Estimate e = mean_estimate(sq);
  CHECK(std::abs(e.value - m.second_moment(1.5, 0.8, 1.0)) < 3.0 * e.std_error);
}

TEST_CASE("Picard solver") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("tanh"));
  const std::vector<double> lambdas{GBMDriftModel::kLambda}, x0{1.0};
  SimConfig cfg = small_cfg();
  const MkvResult r = solve_mkv({m, lambdas}, kHalf, x0, cfg);
  CHECK(r.law.size() == 64);
  CHECK(r.trace.size() == r.iterations);
  CHECK(r.trace.back() < cfg.picard_tol);

  // Fixed point: one more iteration against the result does not move it.
  const NoiseStream noise(cfg.seed);
  const EmpiricalLaw again = integrate_system({m, lambdas}, kHalf, x0, 64, cfg.grid, noise,
                                              NoiseKey{NoiseDomain::mean_field, 0}, &r.law);
  CHECK(wasserstein_paths(again, r.law, 2.0) < cfg.picard_tol);

  SimConfig loose = cfg;
  loose.picard_tol = 1e9;
  const MkvResult one = solve_mkv({m, lambdas}, kHalf, x0, loose);
  CHECK(one.iterations == 1);
  CHECK(one.trace.size() == 1);

  SimConfig tight = cfg;
  tight.picard_tol = 1e-300;
  tight.picard_max_iters = 2;
  try {
    solve_mkv({m, lambdas}, kHalf, x0, tight);
    FAIL("expected PicardNoConvergence");
  } catch (const PicardNoConvergence& e) {
    CHECK(e.trace().size() == 2);
  }

  SimConfig threaded = cfg;
  threaded.threads = 3;
  CHECK(solve_mkv({m, lambdas}, kHalf, x0, threaded).law.atoms() == r.law.atoms());
}

TEST_CASE("synchronous coupling without interaction is exact") {
  const HeatMeanFieldModel m(3, 1.0, InteractionFunction("zero"), 0.5, 1.0);
  const auto lambdas = HeatMeanFieldModel::eigenvalues(3);
  const std::vector<double> x0{1.0, 0.0, -0.5};
  const SimConfig cfg = small_cfg();
  const MkvResult mf = solve_mkv({m, lambdas}, kHalf, x0, cfg);
  const CouplingReport c = synchronous_coupling({m, lambdas}, kHalf, x0, x0, 16, mf.law, cfg);
  CHECK(c.lhs_samples == c.rhs_samples);
  CHECK(c.lhs == c.rhs);
  CHECK(c.dx_term == 0.0);
}

TEST_CASE("moments and increments") {
  const LinearModel bm(1, 0.0, 0.0, 1.0);
  const std::vector<double> lambdas{0.0}, x0{0.0};
  SimConfig cfg = small_cfg(64);
  cfg.replications = 4;
  const auto draws = simulate_replications({bm, lambdas}, kHalf, x0, 500, cfg);
  // E sup_t |W_t|^2 on the grid is below E sup |W|^2 = 4 T (Doob) and above E W_T^2 = 1.
  const Estimate m2 = moment_report(draws, 2.0);
  CHECK(m2.value > 1.0);
  CHECK(m2.value < 4.0);
  const std::vector<std::size_t> lags{1, 2, 4, 8, 16};
  const IncrementReport p2 = increment_report(draws, 2.0, lags);
  REQUIRE(p2.fit);
  CHECK(p2.fit->slope == doctest::Approx(1.0).epsilon(0.05));
  const IncrementReport p4 = increment_report(draws, 4.0, lags);
  CHECK(p4.fit->slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK(p2.means[0] == doctest::Approx(1.0 / 64.0).epsilon(0.05));

  const std::vector<std::size_t> two{1, 2};
  CHECK_THROWS_AS(increment_report(draws, 2.0, two), Error);
  const LinearModel still(1, 0.0, 0.0, 0.0);
  const auto flat = simulate_replications({still, lambdas}, kHalf, x0, 3, cfg);
  const IncrementReport d = increment_report(flat, 2.0, lags);
  CHECK(d.degenerate);
  CHECK_FALSE(d.fit);
}

TEST_CASE("replications do not depend on the thread count") {
  const HeatMeanFieldModel m(4, 1.0, InteractionFunction("controlled_attract"), 0.5, 1.0);
  const auto lambdas = HeatMeanFieldModel::eigenvalues(4);
  const std::vector<double> x0{1.0, 0.5, 0.0, 0.0};
  const ControlTuple ctl{FeedbackControl::threshold(Feature::mode_value(0), 0.5, 1.0, 0.0)};
  SimConfig a = small_cfg(), b = small_cfg();
  b.threads = 4;
  const auto da = simulate_replications({m, lambdas}, ctl, x0, 10, a);
  const auto db = simulate_replications({m, lambdas}, ctl, x0, 10, b);
  REQUIRE(da.size() == db.size());
  for (std::size_t r = 0; r < da.size(); ++r) CHECK(da[r].paths.atoms() == db[r].paths.atoms());
  CHECK_FALSE(da[0].paths.atoms() == da[1].paths.atoms());
}
