#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mflab/error.hpp"
#include "mflab/transport.hpp"

using namespace mflab;

namespace {

double brute_force_assignment(const CostMatrix& c) {
  std::vector<std::size_t> perm(c.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CostMatrix random_cost(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  CostMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST_CASE("assignment matches permutation search") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const CostMatrix c = random_cost(rng, n, n);
    const AssignmentResult a = solve_assignment(c);
    CHECK(a.cost == doctest::Approx(brute_force_assignment(c)).epsilon(1e-12));
    std::vector<std::size_t> cols = a.col_of_row;
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(cols[i] == i);
  }
}

TEST_CASE("transport simplex agrees with assignment on uniform square problems") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 9;
    const CostMatrix c = random_cost(rng, n, n);
    const std::vector<double> w(n, 1.0 / double(n));
    const TransportResult t = solve_transport(w, w, c);
    CHECK(t.cost == doctest::Approx(solve_assignment(c).cost / double(n)).epsilon(1e-12));
  }
}

TEST_CASE("transport simplex on unequal uniform marginals: replicated assignment oracle") {
  // Uniform n vs m atoms equals the assignment problem on lcm(n, m) copies.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 5, m = 1 + (trial / 5) % 6;
    const std::size_t L = std::lcm(n, m);
    const CostMatrix c = random_cost(rng, n, m);
    CostMatrix big(L, L);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j) big(i, j) = c(i / (L / n), j / (L / m));
    const std::vector<double> a(n, 1.0 / double(n)), b(m, 1.0 / double(m));
    const TransportResult t = solve_transport(a, b, c);
    CHECK(t.cost == doctest::Approx(solve_assignment(big).cost / double(L)).epsilon(1e-10));
    // Plan marginals.
    std::vector<double> rs(n, 0.0), cs(m, 0.0);
    for (const auto& f : t.plan) {
      CHECK(f.mass >= -1e-15);
      rs[f.row] += f.mass;
      cs[f.col] += f.mass;
    }
    for (double x : rs) CHECK(x == doctest::Approx(1.0 / double(n)));
    for (double x : cs) CHECK(x == doctest::Approx(1.0 / double(m)));
  }
}

TEST_CASE("transport simplex: one-dimensional monotone coupling oracle") {
  // For convex costs |x - y|^2 on the line the sorted (quantile) coupling is optimal.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.1, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 8, m = 2 + (trial * 7) % 11;
    std::vector<double> x(n), y(m), a(n), b(m);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    for (auto& v : a) v = w(rng);
    for (auto& v : b) v = w(rng);
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (auto& v : a) v /= sa;
    for (auto& v : b) v /= sb;
    CostMatrix c(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) c(i, j) = (x[i] - y[j]) * (x[i] - y[j]);
    // North-west corner on sorted supports is the monotone coupling.
    double oracle = 0.0;
    std::vector<double> ra = a, rb = b;
    for (std::size_t i = 0, j = 0; i < n && j < m;) {
      const double q = std::min(ra[i], rb[j]);
      oracle += q * c(i, j);
      ra[i] -= q;
      rb[j] -= q;
      if (ra[i] <= rb[j]) ++i; else ++j;
    }
    CHECK(solve_transport(a, b, c).cost == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("transport input validation") {
  CostMatrix c(2, 2, 1.0);
  const std::vector<double> a{0.5, 0.5}, bad{0.5, 0.6}, neg{1.5, -0.5};
  CHECK_THROWS_AS(solve_transport(a, bad, c), Error);
  CHECK_THROWS_AS(solve_transport(a, neg, c), Error);
  CHECK_THROWS_AS(solve_transport(a, std::vector<double>{1.0}, c), Error);
}

TEST_CASE("degenerate transportation problems terminate") {
  // Many ties and zero costs provoke degenerate pivots.
  for (std::size_t n : {5u, 20u, 60u}) {
    CostMatrix c(n, n + 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n + 3; ++j) c(i, j) = double((i + j) % 3);
    const std::vector<double> a(n, 1.0 / double(n)), b(n + 3, 1.0 / double(n + 3));
    const TransportResult t = solve_transport(a, b, c);
    CHECK(t.cost >= 0.0);
    CHECK(t.cost <= 2.0);
  }
}
