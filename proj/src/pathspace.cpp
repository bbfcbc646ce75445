#include "mflab/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mflab/error.hpp"
#include "mflab/noise.hpp"
#include "mflab/transport.hpp"

namespace mflab {

TimeGrid::TimeGrid(double T, std::size_t steps) : T_(T), steps_(steps) {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidArgument, "grid needs T > 0");
  if (steps == 0) throw Error(ErrorKind::InvalidArgument, "grid needs at least one step");
}

double TimeGrid::time(std::size_t j) const {
  if (j == steps_) return T_;
  return T_ * static_cast<double>(j) / static_cast<double>(steps_);
}

std::size_t TimeGrid::last_node_at_or_before(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "time must be >= 0");
  if (t >= T_) return steps_;
  auto j = static_cast<std::size_t>(std::floor(t / T_ * static_cast<double>(steps_)));
  // Guard against rounding on either side of a node.
  while (j + 1 <= steps_ && time(j + 1) <= t) ++j;
  while (j > 0 && time(j) > t) --j;
  return j;
}

PathSample::PathSample(TimeGrid grid, std::size_t modes)
    : grid_(grid), modes_(modes), data_(modes * grid.nodes(), 0.0) {
  if (modes == 0) throw Error(ErrorKind::InvalidArgument, "paths need at least one mode");
}

PathSample::PathSample(TimeGrid grid, std::size_t modes, std::vector<double> column_major)
    : grid_(grid), modes_(modes), data_(std::move(column_major)) {
  if (modes == 0) throw Error(ErrorKind::InvalidArgument, "paths need at least one mode");
  if (data_.size() != modes * grid.nodes()) {
    throw Error(ErrorKind::DimensionMismatch, "path data must have K x (N+1) entries");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "path entries must be finite");
  }
}

PathSample PathSample::constant(TimeGrid grid, std::span<const double> value) {
  PathSample p(grid, value.size());
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    std::copy(value.begin(), value.end(), p.column(j).begin());
  }
  return p;
}

namespace {

void require_compatible(const PathSample& a, const PathSample& b) {
  if (!(a.grid() == b.grid()) || a.modes() != b.modes()) {
    throw Error(ErrorKind::DimensionMismatch, "paths live on different grids or mode counts");
  }
}

double column_norm(std::span<const double> col) {
  double acc = 0.0;
  for (double v : col) acc += v * v;
  return std::sqrt(acc);
}

// sup_j ||a(t_j) - b(t_j)|| without materializing the difference.
double sup_distance(const PathSample& a, const PathSample& b) {
  const auto da = a.data();
  const auto db = b.data();
  const std::size_t K = a.modes();
  double best = 0.0;
  for (std::size_t off = 0; off < da.size(); off += K) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double d = da[off + k] - db[off + k];
      acc += d * d;
    }
    best = std::max(best, acc);
  }
  return std::sqrt(best);
}

inline double power(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

inline double root(double x, double p) {
  x = std::max(x, 0.0);
  if (p == 1.0) return x;
  if (p == 2.0) return std::sqrt(x);
  return std::pow(x, 1.0 / p);
}

bool is_uniform(const std::vector<double>& w) {
  const double target = 1.0 / static_cast<double>(w.size());
  for (double x : w) {
    if (std::abs(x - target) > 1e-15) return false;
  }
  return true;
}

void check_weights(const std::vector<double>& w, std::size_t n) {
  if (w.size() != n) throw Error(ErrorKind::DimensionMismatch, "one weight per atom required");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::InvalidArgument, "weights must be finite and >= 0");
    }
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "weights must sum to 1 within 1e-12");
  }
}

// Optimal value of sum pi_ij cost_ij; assignment when both sides are uniform
// with equal counts.
double optimal_cost(const std::vector<double>& a, bool a_uniform, const std::vector<double>& b,
                    bool b_uniform, const CostMatrix& cost) {
  if (a_uniform && b_uniform && a.size() == b.size()) {
    const AssignmentResult r = solve_assignment(cost);
    return r.cost / static_cast<double>(a.size());
  }
  return solve_transport(a, b, cost).cost;
}

// Total order on laws by content, used to present every OT problem in one
// orientation so that d(a, b) and d(b, a) agree bit for bit.
template <typename T>
int compare_seq(const T& a, const T& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return -1;
    if (b[i] < a[i]) return 1;
  }
  return 0;
}

int compare_laws(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  if (int c = compare_seq(a.weights(), b.weights())) return c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = compare_seq(a.atom(i).data(), b.atom(i).data())) return c;
  }
  return 0;
}

int compare_meta(const MetaLaw& a, const MetaLaw& b) {
  if (int c = compare_seq(a.weights(), b.weights())) return c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = compare_laws(*a.atoms()[i], *b.atoms()[i])) return c;
  }
  return 0;
}

}  // namespace

PathSample operator-(const PathSample& a, const PathSample& b) {
  require_compatible(a, b);
  std::vector<double> d(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b.data()[i];
  return PathSample(a.grid(), a.modes(), std::move(d));
}

PathSample scaled(const PathSample& a, double factor) {
  std::vector<double> d(a.data().begin(), a.data().end());
  for (double& v : d) v *= factor;
  return PathSample(a.grid(), a.modes(), std::move(d));
}

EmpiricalLaw::EmpiricalLaw(std::vector<PathSample> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw Error(ErrorKind::InvalidArgument, "empirical law needs an atom");
  weights_.assign(atoms_.size(), 1.0 / static_cast<double>(atoms_.size()));
  uniform_ = true;
  validate();
}

EmpiricalLaw::EmpiricalLaw(std::vector<PathSample> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw Error(ErrorKind::InvalidArgument, "empirical law needs an atom");
  check_weights(weights_, atoms_.size());
  uniform_ = is_uniform(weights_);
  validate();
}

void EmpiricalLaw::validate() const {
  for (const auto& a : atoms_) require_compatible(atoms_.front(), a);
}

MetaLaw::MetaLaw(std::vector<LawPtr> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw Error(ErrorKind::InvalidArgument, "meta law needs an atom");
  for (const auto& a : atoms_) {
    if (!a) throw Error(ErrorKind::InvalidArgument, "null inner law");
  }
  check_weights(weights_, atoms_.size());
}

MetaLaw MetaLaw::dirac(LawPtr law) { return MetaLaw({std::move(law)}, {1.0}); }

MetaLaw MetaLaw::uniform(std::vector<LawPtr> atoms) {
  const std::size_t n = atoms.size();
  return MetaLaw(std::move(atoms), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
}

double sup_norm_upto(const PathSample& path, std::size_t last_node) {
  double best = 0.0;
  const std::size_t end = std::min(last_node, path.grid().steps());
  for (std::size_t j = 0; j <= end; ++j) best = std::max(best, column_norm(path.column(j)));
  return best;
}

double sup_norm(const PathSample& path, double t) {
  return sup_norm_upto(path, path.grid().last_node_at_or_before(t));
}

double law_norm_upto(const EmpiricalLaw& mu, double p, std::size_t last_node) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "law_norm needs p >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += mu.weight(i) * power(sup_norm_upto(mu.atom(i), last_node), p);
  }
  return root(acc, p);
}

double law_norm(const EmpiricalLaw& mu, double p) {
  return law_norm_upto(mu, p, mu.grid().steps());
}

PathSample stopped_path(const PathSample& path, std::size_t last_node) {
  PathSample out = path;
  const std::size_t N = path.grid().steps();
  for (std::size_t j = last_node + 1; j <= N; ++j) {
    auto src = path.column(last_node);
    std::copy(src.begin(), src.end(), out.column(j).begin());
  }
  return out;
}

EmpiricalLaw stopped_law(const EmpiricalLaw& mu, double t) {
  const std::size_t j = mu.grid().last_node_at_or_before(t);
  std::vector<PathSample> atoms;
  atoms.reserve(mu.size());
  for (const auto& a : mu.atoms()) atoms.push_back(stopped_path(a, j));
  return EmpiricalLaw(std::move(atoms), mu.weights());
}

double wasserstein_paths(const EmpiricalLaw& mu, const EmpiricalLaw& nu, double p,
                         std::size_t cap) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "Wasserstein order must be >= 1");
  if (mu.size() > cap || nu.size() > cap) {
    throw Error(ErrorKind::SizeCapExceeded, "law with " + std::to_string(std::max(mu.size(), nu.size())) +
                                                " atoms exceeds the OT cap " + std::to_string(cap));
  }
  require_compatible(mu.atom(0), nu.atom(0));
  if (compare_laws(nu, mu) < 0) return wasserstein_paths(nu, mu, p, cap);
  CostMatrix cost(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      cost(i, j) = power(sup_distance(mu.atom(i), nu.atom(j)), p);
    }
  }
  return root(optimal_cost(mu.weights(), mu.uniform(), nu.weights(), nu.uniform(), cost), p);
}

double InnerDistanceCache::get_or_compute(const LawPtr& a, const LawPtr& b, double q,
                                          std::size_t cap) {
  // Symmetric metric: order the key.
  const EmpiricalLaw* x = a.get();
  const EmpiricalLaw* y = b.get();
  if (std::less<const EmpiricalLaw*>{}(y, x)) std::swap(x, y);
  const Key key{x, y, q};
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const double d = (x == y) ? 0.0 : wasserstein_paths(*x, *y, q, cap);
  std::lock_guard lock(mutex_);
  memo_[key] = d;
  keep_alive_.push_back(a);
  keep_alive_.push_back(b);
  return d;
}

std::size_t InnerDistanceCache::size() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

double wasserstein_meta(const MetaLaw& Q, const MetaLaw& R, double q, std::size_t cap,
                        InnerDistanceCache* cache) {
  if (!(q >= 1.0)) throw Error(ErrorKind::InvalidArgument, "Wasserstein order must be >= 1");
  if (Q.size() > cap || R.size() > cap) {
    throw Error(ErrorKind::SizeCapExceeded, "meta law exceeds the OT cap");
  }
  if (compare_meta(R, Q) < 0) return wasserstein_meta(R, Q, q, cap, cache);
  InnerDistanceCache local;
  InnerDistanceCache& memo = cache ? *cache : local;
  CostMatrix cost(Q.size(), R.size());
  for (std::size_t i = 0; i < Q.size(); ++i) {
    for (std::size_t j = 0; j < R.size(); ++j) {
      cost(i, j) = power(memo.get_or_compute(Q.atoms()[i], R.atoms()[j], q, cap), q);
    }
  }
  const bool qu = is_uniform(Q.weights());
  const bool ru = is_uniform(R.weights());
  return root(optimal_cost(Q.weights(), qu, R.weights(), ru, cost), q);
}

HausdorffResult hausdorff_detail(const std::vector<MetaLaw>& A, const std::vector<MetaLaw>& B,
                                 double q, std::size_t cap, InnerDistanceCache* cache) {
  if (A.empty() || B.empty()) throw Error(ErrorKind::EmptySet, "Hausdorff distance needs nonempty sets");
  InnerDistanceCache local;
  InnerDistanceCache& memo = cache ? *cache : local;
  std::vector<double> d(A.size() * B.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    for (std::size_t j = 0; j < B.size(); ++j) {
      d[i * B.size() + j] = wasserstein_meta(A[i], B[j], q, cap, &memo);
    }
  }
  HausdorffResult r{0.0, 0.0, 0.0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < A.size(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < B.size(); ++j) {
      if (d[i * B.size() + j] < d[i * B.size() + arg]) arg = j;
    }
    const double m = d[i * B.size() + arg];
    if (i == 0 || m > r.a_to_b) {
      r.a_to_b = m;
      r.a_argmax = i;
      r.a_nearest = arg;
    }
  }
  for (std::size_t j = 0; j < B.size(); ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < A.size(); ++i) {
      if (d[i * B.size() + j] < d[arg * B.size() + j]) arg = i;
    }
    const double m = d[arg * B.size() + j];
    if (j == 0 || m > r.b_to_a) {
      r.b_to_a = m;
      r.b_argmax = j;
      r.b_nearest = arg;
    }
  }
  r.value = std::max(r.a_to_b, r.b_to_a);
  return r;
}

double hausdorff(const std::vector<MetaLaw>& A, const std::vector<MetaLaw>& B, double q,
                 std::size_t cap, InnerDistanceCache* cache) {
  return hausdorff_detail(A, B, q, cap, cache).value;
}

EmpiricalLaw subsample_law(const EmpiricalLaw& mu, std::size_t cap, std::uint64_t seed) {
  const std::size_t n = mu.size();
  if (n <= cap) return mu;
  const NoiseStream rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cap; ++i) {
    const double u = rng.uniform(NoiseDomain::sampling, static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(cap), 0);
    const std::size_t span = n - i;
    const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(u * static_cast<double>(span)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<PathSample> atoms;
  std::vector<double> w;
  atoms.reserve(cap);
  double total = 0.0;
  for (std::size_t i : idx) {
    atoms.push_back(mu.atom(i));
    w.push_back(mu.weight(i));
    total += mu.weight(i);
  }
  if (mu.uniform()) return EmpiricalLaw(std::move(atoms));
  for (double& x : w) x /= total;
  return EmpiricalLaw(std::move(atoms), std::move(w));
}

}  // namespace mflab
