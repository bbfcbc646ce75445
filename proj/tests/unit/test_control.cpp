#include <cmath>

#include "doctest.h"
#include "mflab/control.hpp"
#include "mflab/error.hpp"

using namespace mflab;

namespace {

const std::vector<double> kGbmLambda{GBMDriftModel::kLambda};

SimConfig value_cfg() {
  SimConfig cfg;
  cfg.grid = TimeGrid(1.0, 10);
  cfg.replications = 400;
  cfg.mkv_population = 256;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("feedback controls") {
  const TimeGrid g(1.0, 4);
  PathSample h(g, 2);
  CHECK(FeedbackControl::constant(0.7).value(2, h) == 0.7);

  const auto thr = FeedbackControl::threshold(Feature::mode_value(0), 0.0, 0.2, 0.8);
  CHECK(thr.value(1, h) == 0.2);  // tie goes below
  h(0, 1) = 0.1;
  CHECK(thr.value(1, h) == 0.8);
  h(0, 1) = -0.1;
  CHECK(thr.value(1, h) == 0.2);

  const auto sch = FeedbackControl::schedule({0.5}, {0.2, 0.9});
  CHECK(sch.value(1, h) == 0.2);  // t = 0.25
  CHECK(sch.value(2, h) == 0.9);  // t = 0.5, right-continuous
  CHECK(sch.open_loop());
  CHECK_FALSE(thr.open_loop());

  PathSample p(g, 1);
  p(0, 1) = 3.0;
  const auto sup = FeedbackControl::threshold(Feature::running_sup(), 2.0, 1.0, 0.0);
  CHECK(sup.value(0, p) == 1.0);
  CHECK(sup.value(2, p) == 0.0);

  // 2 time bins x 2 feature bins cut at 0; an edge value falls in the upper bin.
  const auto tab = FeedbackControl::tabular(2, Feature::mode_value(0), {0.0}, {0.1, 0.2, 0.3, 0.4});
  CHECK(tab.value(0, p) == 0.2);
  p(0, 3) = -1.0;
  CHECK(tab.value(3, p) == 0.3);

  CHECK_THROWS_AS(FeedbackControl::constant(1.5), Error);
  CHECK_THROWS_AS(FeedbackControl::schedule({0.5}, {0.2}), Error);
  CHECK_THROWS_AS(FeedbackControl::tabular(2, Feature::mode_value(0), {0.0}, {0.1}), Error);
}

TEST_CASE("control predictability checker") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("zero"));
  const auto probes = make_probe_sampler(m, {});
  CHECK(check_control_predictability(
            FeedbackControl::threshold(Feature::running_sup(), 1.0, 0.0, 1.0), probes, 100)
            .verdict == Verdict::pass);
}

TEST_CASE("payoff catalog") {
  const TimeGrid g(1.0, 2);
  auto constant = [&](double c) { return PathSample::constant(g, std::vector<double>{c}); };
  const Psi m2 = Psi::terminal_moment(2.0, 2.0);
  CHECK(m2(EmpiricalLaw({constant(3.0)})) == 9.0);
  CHECK(m2(EmpiricalLaw({constant(0.0), constant(2.0)})) == 2.0);
  CHECK(Psi::terminal_mean_payoff(TestFunction("one"))(EmpiricalLaw({constant(-4.0)})) == 1.0);
  CHECK(Psi::running_integral(TestFunction("one"))(EmpiricalLaw({constant(5.0)})) == doctest::Approx(1.0));
  CHECK(m2.shifted(1.5)(EmpiricalLaw({constant(1.0)})) == 2.5);
  CHECK(TestFunction("clipped_square", 4.0)(3.0) == 4.0);
  CHECK_THROWS_AS(Psi::terminal_moment(3.0, 2.0), Error);
  CHECK_THROWS_AS(TestFunction("clipped_square"), Error);
}

TEST_CASE("value of Brownian motion squared") {
  const GBMDriftModel bm(1.0, 1.0, ScalarFunction("zero"));
  const ValueProblem prob{bm, kGbmLambda, {0.0}, 20, Psi::terminal_moment(2.0, 2.0)};
  const ValueReport r =
      value_estimate(prob, ControlFamily::shared({FeedbackControl::constant(0.0)}), value_cfg());
  CHECK(r.estimates[0].std_error > 0.0);
  CHECK(std::abs(r.estimates[0].value - 1.0) < 3.0 * r.estimates[0].std_error);
}

TEST_CASE("common random numbers and tie rule") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("tanh"));
  const auto fam = ControlFamily::shared({FeedbackControl::constant(0.3), FeedbackControl::constant(0.3)});
  for (std::size_t n : {0, 8}) {
    const ValueProblem prob{m, kGbmLambda, {1.0}, n, Psi::terminal_moment(2.0, 2.0)};
    const ValueReport r = value_estimate(prob, fam, value_cfg());
    CHECK(r.samples[0] == r.samples[1]);
    CHECK(r.argmax == 0);
    CHECK(r.paired_se(0, 1) == 0.0);
  }
  const ValueProblem one{m, kGbmLambda, {1.0}, 8, Psi::terminal_mean_payoff(TestFunction("one"))};
  const ValueReport r1 = value_estimate(one, fam, value_cfg());
  CHECK(r1.estimates[0].value == 1.0);
  CHECK(r1.estimates[0].std_error == 0.0);
}

TEST_CASE("value estimates are deterministic and thread independent") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("tanh"));
  const auto fam = ControlFamily::shared({FeedbackControl::constant(0.0), FeedbackControl::constant(1.0)});
  const ValueProblem prob{m, kGbmLambda, {1.0}, 8, Psi::terminal_moment(2.0, 2.0)};
  SimConfig a = value_cfg(), b = value_cfg();
  b.threads = 3;
  CHECK(value_estimate(prob, fam, a).samples == value_estimate(prob, fam, b).samples);
}

TEST_CASE("epsilon-optimal selection") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("zero"));
  const auto fam = ControlFamily::shared({FeedbackControl::constant(0.0), FeedbackControl::constant(1.0)});
  const ValueProblem prob{m, kGbmLambda, {1.0}, 16, Psi::terminal_moment(2.0, 2.0)};
  const SimConfig cfg = value_cfg();
  const ValueReport r = value_estimate(prob, fam, cfg);
  CHECK(r.argmax == 1);
  const EpsilonCertificate tight = epsilon_optimal(r, 0.5);
  CHECK(tight.index == 1);
  CHECK(tight.gap == 0.0);
  CHECK(tight.certified_eps <= 0.5);
  // Huge eps admits the lowest index.
  CHECK(epsilon_optimal(r, 100.0).index == 0);
  // eps below the Monte-Carlo resolution is inconclusive.
  CHECK_THROWS_AS(epsilon_optimal(r, 1e-6), Error);

  const auto single = ControlFamily::shared({FeedbackControl::constant(0.5)});
  const EpsilonCertificate s = epsilon_optimal(prob, single, 1e-6, cfg);
  CHECK(s.index == 0);
  CHECK(s.certified_eps == 0.0);
  CHECK(s.estimate_se > 0.0);

  // Shifting psi shifts every value but not the argmax.
  const ValueProblem shifted{m, kGbmLambda, {1.0}, 16, Psi::terminal_moment(2.0, 2.0).shifted(7.0)};
  const ValueReport rs = value_estimate(shifted, fam, cfg);
  CHECK(rs.argmax == r.argmax);
  CHECK(rs.sup == doctest::Approx(r.sup + 7.0));
}
