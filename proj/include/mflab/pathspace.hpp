#pragma once

// Discretized path space C([0,T]; H) in spectral coordinates, empirical laws
// on it, laws of laws, and the Wasserstein / Hausdorff metrics between them.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace mflab {

class TimeGrid {
 public:
  TimeGrid(double T, std::size_t steps);

  double T() const { return T_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double dt() const { return T_ / static_cast<double>(steps_); }
  double time(std::size_t j) const;
  /// Index of the last node t_j <= t.
  std::size_t last_node_at_or_before(double t) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double T_;
  std::size_t steps_;
};

/// A path sampled at the grid nodes. Stored column-major: column j holds the
/// K mode coefficients at t_j.
class PathSample {
 public:
  PathSample(TimeGrid grid, std::size_t modes);
  PathSample(TimeGrid grid, std::size_t modes, std::vector<double> column_major);

  /// The path that stays at `value` for all t.
  static PathSample constant(TimeGrid grid, std::span<const double> value);

  const TimeGrid& grid() const { return grid_; }
  std::size_t modes() const { return modes_; }
  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * modes_, modes_};
  }
  std::span<double> column(std::size_t j) { return {data_.data() + j * modes_, modes_}; }
  double operator()(std::size_t mode, std::size_t j) const { return data_[j * modes_ + mode]; }
  double& operator()(std::size_t mode, std::size_t j) { return data_[j * modes_ + mode]; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const PathSample&, const PathSample&) = default;

 private:
  TimeGrid grid_;
  std::size_t modes_;
  std::vector<double> data_;
};

PathSample operator-(const PathSample& a, const PathSample& b);
PathSample scaled(const PathSample& a, double factor);

class EmpiricalLaw {
 public:
  EmpiricalLaw() = default;
  /// Uniform weights 1/n.
  explicit EmpiricalLaw(std::vector<PathSample> atoms);
  EmpiricalLaw(std::vector<PathSample> atoms, std::vector<double> weights);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<PathSample>& atoms() const { return atoms_; }
  std::vector<PathSample>& mutable_atoms() { return atoms_; }
  const PathSample& atom(std::size_t i) const { return atoms_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  bool uniform() const { return uniform_; }
  const TimeGrid& grid() const { return atoms_.front().grid(); }
  std::size_t modes() const { return atoms_.front().modes(); }

 private:
  void validate() const;

  std::vector<PathSample> atoms_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

using LawPtr = std::shared_ptr<const EmpiricalLaw>;

/// Finitely supported law on laws. Atoms are shared so inner distances can be
/// memoized by identity.
class MetaLaw {
 public:
  MetaLaw(std::vector<LawPtr> atoms, std::vector<double> weights);
  static MetaLaw dirac(LawPtr law);
  static MetaLaw uniform(std::vector<LawPtr> atoms);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<LawPtr>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<LawPtr> atoms_;
  std::vector<double> weights_;
};

/// max over nodes t_j <= t of the Euclidean coefficient norm.
double sup_norm(const PathSample& path, double t);
double sup_norm_upto(const PathSample& path, std::size_t last_node);

/// (sum_i w_i sup_norm(atom_i, T)^p)^(1/p)
double law_norm(const EmpiricalLaw& mu, double p);
double law_norm_upto(const EmpiricalLaw& mu, double p, std::size_t last_node);

/// Freezes every atom at its value at the last node <= t.
EmpiricalLaw stopped_law(const EmpiricalLaw& mu, double t);
PathSample stopped_path(const PathSample& path, std::size_t last_node);

inline constexpr std::size_t kDefaultOtCap = 512;

/// Exact p-Wasserstein distance with ground cost sup_norm(a - b, T).
/// Uniform equal-size inputs are solved as an assignment problem, anything
/// else with the transportation simplex.
double wasserstein_paths(const EmpiricalLaw& mu, const EmpiricalLaw& nu, double p,
                         std::size_t cap = kDefaultOtCap);

/// Cache of inner w_q distances keyed by (law identity, law identity, q).
/// Safe for concurrent use.
class InnerDistanceCache {
 public:
  double get_or_compute(const LawPtr& a, const LawPtr& b, double q, std::size_t cap);
  std::size_t size() const;

 private:
  using Key = std::tuple<const EmpiricalLaw*, const EmpiricalLaw*, double>;
  mutable std::mutex mutex_;
  std::map<Key, double> memo_;
  std::vector<LawPtr> keep_alive_;
};

/// q-Wasserstein distance between laws of laws with ground metric w_q.
double wasserstein_meta(const MetaLaw& Q, const MetaLaw& R, double q,
                        std::size_t cap = kDefaultOtCap, InnerDistanceCache* cache = nullptr);

struct HausdorffResult {
  double value;
  double a_to_b;  // max_{a in A} min_{b in B} d(a, b)
  double b_to_a;  // max_{b in B} min_{a in A} d(a, b)
  std::size_t a_argmax;
  std::size_t b_argmax;
  std::size_t a_nearest;  // nearest element of B to A[a_argmax]
  std::size_t b_nearest;  // nearest element of A to B[b_argmax]
};

HausdorffResult hausdorff_detail(const std::vector<MetaLaw>& A, const std::vector<MetaLaw>& B,
                                 double q, std::size_t cap = kDefaultOtCap,
                                 InnerDistanceCache* cache = nullptr);

double hausdorff(const std::vector<MetaLaw>& A, const std::vector<MetaLaw>& B, double q,
                 std::size_t cap = kDefaultOtCap, InnerDistanceCache* cache = nullptr);

/// Seeded subsample of at most `cap` atoms without replacement (weights
/// renormalized). Returns the input unchanged when it already fits.
EmpiricalLaw subsample_law(const EmpiricalLaw& mu, std::size_t cap, std::uint64_t seed);

}  // namespace mflab
