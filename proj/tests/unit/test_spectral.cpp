#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mflab/error.hpp"
#include "mflab/spectral.hpp"

using namespace mflab;

namespace {

FrameworkConstants standard(double T = 1.0) { return validate_constants(0.35, 4.0, 2.0, 0.3, T); }

std::string violation(double alpha, double p, double q, double rho, double T) {
  try {
    validate_constants(alpha, p, q, rho, T);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConstraintViolation);
    return e.what();
  }
  return "";
}

SpectralSpace power_space(std::size_t K, double rho, double c = 1.0) {
  std::vector<double> lambdas(K), cs(K, c);
  for (std::size_t k = 0; k < K; ++k) lambdas[k] = double(k + 1) * double(k + 1);
  const double p = 2.0 / (1.0 - rho) + 1.0;  // keeps rho < 1 - 2/p
  return SpectralSpace(lambdas, cs, validate_constants((1.0 - rho) / 2.0, p, 1.0, rho, 1.0));
}

}  // namespace

TEST_CASE("constants: admissible tuples and named violations") {
  CHECK_NOTHROW(validate_constants(0.35, 4, 2, 0.3, 1));
  CHECK(violation(0.2, 4, 2, 0.3, 1).find("p > 1/alpha") != std::string::npos);
  CHECK(violation(0.5, 4, 2, 0.3, 1).find("alpha in (0, 1/2)") != std::string::npos);
  CHECK(violation(0.35, 4, 4, 0.3, 1).find("1 <= q < p") != std::string::npos);
  CHECK(violation(0.35, 4, 0.5, 0.3, 1).find("1 <= q < p") != std::string::npos);
  CHECK(violation(0.35, 4, 2, 0.5, 1).find("0 < rho < 1 - 2/p") != std::string::npos);
  CHECK(violation(0.35, 4, 2, 0.3, 0).find("T > 0") != std::string::npos);
  CHECK(violation(NAN, 4, 2, 0.3, 1).find("finite") != std::string::npos);
  CHECK_FALSE(constants_violation(0.35, 4, 2, 0.3, 1).has_value());
}

TEST_CASE("constants: alpha = (1 - rho)/2 is admissible whenever p is") {
  for (double rho = 0.05; rho < 0.95; rho += 0.05) {
    const double p = 2.0 / (1.0 - rho) + 0.5;
    CHECK_NOTHROW(validate_constants((1.0 - rho) / 2.0, p, 1.0, rho, 1.0));
  }
}

TEST_CASE("mode sequences") {
  const auto l = expand_mode_sequence("k^2*pi^2", 3);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(l[0] == doctest::Approx(pi2));
  CHECK(l[2] == doctest::Approx(9 * pi2));
  const auto c = expand_mode_sequence("0.5*k^-1", 4);
  CHECK(c[3] == doctest::Approx(0.125));
  CHECK(expand_mode_sequence("1e-12", 2)[1] == 1e-12);
  CHECK(expand_mode_sequence("1, 4, 9", 3)[1] == 4.0);
  CHECK_THROWS_AS(expand_mode_sequence("1, 4", 3), Error);
  CHECK_THROWS_AS(expand_mode_sequence("k^", 3), Error);
}

TEST_CASE("space invariants") {
  CHECK_THROWS_AS(SpectralSpace({1.0, 0.0}, {1.0, 1.0}, standard()), Error);
  CHECK_THROWS_AS(SpectralSpace({1.0}, {1.0, 1.0}, standard()), Error);
  CHECK_THROWS_AS(SpectralSpace({1.0}, {1.0}, standard(), 2.0, 1.0), Error);
  const SpectralSpace s({1.0, 2.0}, {1.0, 1.0}, standard());
  const std::vector<double> x{3.0, 4.0};
  const HNorm h = h_norm(s, x);
  CHECK(h.value == 5.0);
  CHECK(h.lower == 5.0);
  CHECK(h.upper == 5.0);
  const SpectralSpace r({1.0, 2.0}, {1.0, 1.0}, standard(), 0.25, 4.0);
  const HNorm hr = h_norm(r, x);
  CHECK(hr.lower == doctest::Approx(2.5));
  CHECK(hr.upper == doctest::Approx(10.0));
}

TEST_CASE("semigroup and kappa") {
  const SpectralSpace s({1.0, 3.0}, {2.0, 1.0}, standard());
  const std::vector<double> x{4.0, 1.0};
  const auto y = semigroup_apply(s, std::log(2.0), x);
  CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(kappa(s, 0.0) == doctest::Approx(std::sqrt(5.0)));
  CHECK(kappa(s, 0.5, 3.0) ==
        doctest::Approx(3.0 * std::sqrt(4.0 * std::exp(-1.0) + std::exp(-3.0))));
}

TEST_CASE("summation: partial sums against direct p-series and zeta tail") {
  const std::size_t K = 1000;
  const SpectralSpace pass = power_space(K, 0.6);
  const ConditionReport r = summation_condition(pass);
  CHECK(r.verdict == Verdict::pass);
  double direct = 0.0;
  for (std::size_t k = K; k >= 1; --k) direct += std::pow(double(k), -1.2);
  CHECK(r.partial_sum == doctest::Approx(direct).epsilon(1e-13));
  const double true_tail = boost::math::zeta(1.2) - direct;
  // A K^(1-s)/(s-1) is the integral from K, an upper bound to within one term.
  CHECK(r.tail_bound >= true_tail);
  CHECK(r.tail_bound <= true_tail + 2.0 * std::pow(double(K), -1.2));

  const ConditionReport f = summation_condition(power_space(K, 0.4));
  CHECK(f.verdict == Verdict::fail);
  REQUIRE(f.witness.has_value());
  CHECK(*f.witness == K);
  CHECK(f.statistic == doctest::Approx(0.8));

  CHECK(summation_condition(power_space(K, 0.5)).verdict == Verdict::inconclusive);
  CHECK(summation_condition(power_space(3, 0.4)).verdict == Verdict::pass);
}

TEST_CASE("dz integral: incomplete-gamma closed form") {
  // int_0^T e^{-2 lambda s} s^{-2 alpha} ds = (2 lambda)^{2 alpha - 1} gamma_lower(1 - 2 alpha, 2 lambda T)
  for (double alpha : {0.05, 0.2, 0.35, 0.45}) {
    for (double lambda : {1e-6, 0.5, 10.0, 1000.0}) {
      const double T = 1.3;
      const SpectralSpace s({lambda}, {1.0}, validate_constants(alpha, 1.0 / alpha + 1.0, 1.0,
                                                                 0.01, T));
      const double a = 1.0 - 2.0 * alpha;
      const double exact = std::pow(2.0 * lambda, -a) * boost::math::tgamma_lower(a, 2.0 * lambda * T);
      const QuadratureResult q = dz_integral(s, alpha, 1.0);
      CHECK(q.value == doctest::Approx(exact).epsilon(1e-8));
      CHECK(dz_integral(s, alpha, 2.0).value == doctest::Approx(4.0 * exact).epsilon(1e-8));
    }
  }
}

TEST_CASE("dz integral: graded-mesh reference with a million nodes") {
  const double alpha = 0.3, T = 1.0;
  std::vector<double> lambdas, cs;
  for (int k = 1; k <= 5; ++k) {
    lambdas.push_back(k * k * std::numbers::pi * std::numbers::pi);
    cs.push_back(1.0 / k);
  }
  const SpectralSpace s(lambdas, cs, validate_constants(alpha, 4.0, 2.0, 0.4, T));
  // Midpoint rule in u with s = T u^g, g = 1/(1 - 2 alpha).
  const std::size_t N = 1000000;
  const double g = 1.0 / (1.0 - 2.0 * alpha);
  double ref = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double u = (j + 0.5) / N;
    const double sj = T * std::pow(u, g);
    double acc = 0.0;
    for (std::size_t k = 0; k < 5; ++k) acc += cs[k] * cs[k] * std::exp(-2.0 * lambdas[k] * sj);
    ref += acc;
  }
  ref *= std::pow(T, 1.0 - 2.0 * alpha) * g / N;
  CHECK(dz_integral(s, alpha).value == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("dz integral: unresolvable integrand is reported") {
  const SpectralSpace s({1e14}, {1.0}, validate_constants(0.05, 21.0, 1.0, 0.01, 1.0));
  try {
    dz_integral(s, 0.05);
    FAIL("expected QuadratureUnstable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::QuadratureUnstable);
  }
  CHECK_THROWS_AS(dz_integral(s, 0.5), Error);
}
