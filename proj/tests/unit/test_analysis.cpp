#include <cmath>

#include "doctest.h"
#include "mflab/analysis.hpp"
#include "mflab/error.hpp"

using namespace mflab;

namespace {

const std::vector<double> kGbmLambda{GBMDriftModel::kLambda};

SimConfig cfg_small() {
  SimConfig cfg;
  cfg.grid = TimeGrid(1.0, 4);
  cfg.replications = 16;
  cfg.mkv_population = 128;
  cfg.ot_cap = 128;
  cfg.seed = 21;
  return cfg;
}

}  // namespace

TEST_CASE("slope fitting and input validation") {
  ConvergenceStudy s;
  for (double n : {10.0, 100.0, 1000.0}) s.rows.push_back({n, 1.0 / std::sqrt(n), 0.0, {}});
  fit_slope(s);
  REQUIRE(s.fit);
  CHECK(s.fit->slope == doctest::Approx(-0.5));
  s.rows.pop_back();
  fit_slope(s);
  CHECK_FALSE(s.fit);
  CHECK_THROWS_AS(require_increasing({}), Error);
  CHECK_THROWS_AS(require_increasing({4, 4}), Error);
  CHECK_THROWS_AS(require_increasing({0, 4}), Error);
  CHECK_THROWS_AS(StudyRow{}.extra("missing"), Error);
  CHECK(gbm_default_clip(1.0, 4.0, 1.0) == 169.0);
}

TEST_CASE("poc study: shared draw at n = M reproduces the mean-field law") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("zero"));
  const ControlTuple c{FeedbackControl::constant(0.5)};
  SimConfig cfg = cfg_small();
  cfg.replications = 2;
  PocOptions opt;
  opt.shared_draw = true;
  const ConvergenceStudy s = poc_study({m, kGbmLambda}, c, {1.0}, {cfg.mkv_population}, cfg, opt);
  CHECK(s.rows[0].stat == 0.0);
}

TEST_CASE("poc study decreases in n") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("tanh"));
  const ControlTuple c{FeedbackControl::constant(0.5)};
  const ConvergenceStudy s = poc_study({m, kGbmLambda}, c, {1.0}, {4, 16, 64}, cfg_small());
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[2].stat < s.rows[0].stat);
  CHECK(s.rows[0].extra("mixture") == doctest::Approx(std::sqrt(s.rows[0].stat)));
  REQUIRE(s.fit);
  CHECK(s.fit->slope < 0.0);
}

TEST_CASE("hausdorff study identities") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("tanh"));
  const Dynamics dyn{m, kGbmLambda};
  const SimConfig cfg = cfg_small();
  const auto fam = ControlFamily::shared({FeedbackControl::constant(0.0), FeedbackControl::constant(1.0)});
  HausdorffOptions same;
  same.identical_sets = true;
  for (const auto& row : hausdorff_study(dyn, fam, {1.0}, {8, 32}, cfg, same).rows) {
    CHECK(row.stat == 0.0);
  }
  const auto single = ControlFamily::shared({FeedbackControl::constant(0.5)});
  const ConvergenceStudy h = hausdorff_study(dyn, single, {1.0}, {8, 32}, cfg);
  const ConvergenceStudy p = poc_study(dyn, single[0], {1.0}, {8, 32}, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(h.rows[i].stat - p.rows[i].extra("mixture")) <= 1e-12);
    CHECK(h.rows[i].extra("n_to_mean_field") == h.rows[i].stat);
  }
}

TEST_CASE("value convergence and gbm demo bookkeeping") {
  const GBMDriftModel m(0.5, 2.0, ScalarFunction("zero"));
  const auto fam = ControlFamily::shared({FeedbackControl::constant(0.0), FeedbackControl::constant(1.0)});
  SimConfig cfg = cfg_small();
  cfg.replications = 64;
  const ConvergenceStudy v = value_convergence_study({m, kGbmLambda}, fam,
                                                     Psi::terminal_moment(2.0, 2.0), {1.0}, {4, 16}, cfg);
  CHECK(v.rows.size() == 2);
  CHECK(v.rows[0].extra("argmax_n") == 1.0);
  CHECK(v.rows[0].stat == doctest::Approx(std::abs(v.rows[0].extra("sup_n") - v.rows[0].extra("sup_mean_field"))));

  const GbmDemoResult g = gbm_demo(m, fam, TestFunction("clipped_square", 100.0), {0.5, 1.0}, {4, 16}, cfg);
  REQUIRE(g.mean_field.size() == 2);
  CHECK(g.mean_field[1].argmax == 1);
  CHECK(std::abs(g.mean_field[1].sup - 3.0) < 4.0 * g.mean_field[1].se);
  CHECK(g.study.rows[0].se > 0.0);
}

TEST_CASE("dt refinement on an OU system") {
  const LinearModel m(2, 0.5, 1.0, 0.8);
  const std::vector<double> lambdas{1.0, 4.0};
  SimConfig cfg = cfg_small();
  cfg.replications = 32;
  const ControlTuple c{FeedbackControl::constant(0.0)};
  const double exact = m.second_moment(1.0, 1.0, 1.0) + m.second_moment(4.0, -1.0, 1.0);
  const ConvergenceStudy s = dt_refinement({m, lambdas}, c, {1.0, -1.0}, {2, 4, 8, 16, 64}, 50, cfg, exact);
  CHECK(s.x_label == "dt");
  CHECK(s.rows.back().stat == 0.0);
  CHECK(s.rows[0].extra("dt") == 0.5);
  CHECK(s.rows.back().extra("closed_form_error") < 4.0 * s.rows.back().extra("estimate_se") + 0.02);
  REQUIRE(s.fit);
  CHECK(s.fit->slope > 0.5);
  CHECK_THROWS_AS(dt_refinement({m, lambdas}, c, {1.0, -1.0}, {3, 4}, 5, cfg), Error);
}
