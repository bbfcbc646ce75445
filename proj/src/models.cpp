#include "mflab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "mflab/error.hpp"
#include "mflab/noise.hpp"

namespace mflab {

ControlPoint::ControlPoint(std::vector<double> values) : f(std::move(values)) {
  if (f.empty()) throw Error(ErrorKind::InvalidArgument, "control point needs a coordinate");
  for (double v : f) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "control coordinates must lie in [0, 1]");
    }
  }
}

std::vector<double> CoefficientModel::drift(const ControlPoint& f, std::size_t step,
                                            const PathSample& history,
                                            const EmpiricalLaw& law) const {
  std::vector<double> b(modes()), s(modes());
  coefficients(f, step, history, law_stats(step, law), b, s);
  return b;
}

std::vector<double> CoefficientModel::vol_diag(const ControlPoint& f, std::size_t step,
                                               const PathSample& history,
                                               const EmpiricalLaw& law) const {
  std::vector<double> b(modes()), s(modes());
  coefficients(f, step, history, law_stats(step, law), b, s);
  return s;
}

// ---- catalog functions ------------------------------------------------------

ScalarFunction::ScalarFunction(std::string name, double param)
    : name_(std::move(name)), param_(param) {
  if (name_ == "tanh") {
    kind_ = Kind::tanh;
  } else if (name_ == "clipped_identity") {
    kind_ = Kind::clipped_identity;
    if (!(param_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "clipped_identity needs a clip level > 0");
  } else if (name_ == "constant") {
    kind_ = Kind::constant;
  } else if (name_ == "zero") {
    kind_ = Kind::constant;
    param_ = 0.0;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown function '" + name_ + "'");
  }
}

double ScalarFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::tanh: return std::tanh(x);
    case Kind::clipped_identity: return std::clamp(x, -param_, param_);
    case Kind::constant: return param_;
  }
  return 0.0;
}

double ScalarFunction::sup_abs() const {
  switch (kind_) {
    case Kind::tanh: return 1.0;
    case Kind::clipped_identity: return param_;
    case Kind::constant: return std::abs(param_);
  }
  return 0.0;
}

double ScalarFunction::lipschitz() const { return kind_ == Kind::constant ? 0.0 : 1.0; }

InteractionFunction::InteractionFunction(std::string name) : name_(std::move(name)) {
  if (name_ == "tanh_attract") {
    kind_ = Kind::tanh_attract;
  } else if (name_ == "controlled_attract") {
    kind_ = Kind::controlled_attract;
  } else if (name_ == "sin_mean") {
    kind_ = Kind::sin_mean;
  } else if (name_ == "zero") {
    kind_ = Kind::zero;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown interaction '" + name_ + "'");
  }
}

double InteractionFunction::operator()(double x, double m, double f) const {
  switch (kind_) {
    case Kind::tanh_attract: return std::tanh(m - x);
    case Kind::controlled_attract: return f * std::tanh(m - x);
    case Kind::sin_mean: return std::sin(m);
    case Kind::zero: return 0.0;
  }
  return 0.0;
}

bool InteractionFunction::reads_law() const { return kind_ != Kind::zero; }

// ---- GBM drift model --------------------------------------------------------

GBMDriftModel::GBMDriftModel(double a_low, double a_high, ScalarFunction h)
    : a_low_(a_low), a_high_(a_high), h_(std::move(h)) {
  if (!(a_low >= 0.0 && a_low <= a_high) || !std::isfinite(a_high)) {
    throw Error(ErrorKind::InvalidArgument, "need 0 <= a_low <= a_high");
  }
}

bool GBMDriftModel::law_dependent() const { return h_.lipschitz() != 0.0; }

double GBMDriftModel::volatility(double f) const {
  return std::sqrt(a_low_ + f * (a_high_ - a_low_));
}

LawStats GBMDriftModel::law_stats(std::size_t step, const EmpiricalLaw& law) const {
  if (!law_dependent()) return {};
  double acc = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) acc += law.weight(i) * h_(law.atom(i)(0, step));
  return {acc};
}

void GBMDriftModel::coefficients(const ControlPoint& f, std::size_t, const PathSample&,
                                 const LawStats& stats, std::span<double> drift,
                                 std::span<double> vol) const {
  drift[0] = stats.empty() ? h_.param() : stats[0];
  vol[0] = volatility(f[0]);
}

double GBMDriftModel::declared_growth() const { return h_.sup_abs() + std::sqrt(a_high_); }

std::optional<double> GBMDriftModel::declared_lipschitz() const { return h_.lipschitz(); }

std::vector<double> GBMDriftModel::declared_mode_bounds() const {
  return {std::sqrt(h_.sup_abs() * h_.sup_abs() + a_high_)};
}

// ---- heat mean-field model -------------------------------------------------

HeatMeanFieldModel::HeatMeanFieldModel(std::size_t K, double c_scale, InteractionFunction g,
                                       double v_low, double v_high)
    : g_(std::move(g)), v_low_(v_low), v_high_(v_high) {
  if (K == 0) throw Error(ErrorKind::InvalidArgument, "heat model needs K >= 1");
  if (!(c_scale >= 0.0)) throw Error(ErrorKind::InvalidArgument, "c_scale must be >= 0");
  if (!(v_low >= 0.0 && v_low <= v_high) || !std::isfinite(v_high)) {
    throw Error(ErrorKind::InvalidArgument, "need 0 <= v_low <= v_high");
  }
  amplitudes_.resize(K);
  for (std::size_t k = 0; k < K; ++k) amplitudes_[k] = c_scale / static_cast<double>(k + 1);
}

std::vector<double> HeatMeanFieldModel::eigenvalues(std::size_t K) {
  std::vector<double> l(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double kk = static_cast<double>(k + 1);
    l[k] = kk * kk * std::numbers::pi * std::numbers::pi;
  }
  return l;
}

LawStats HeatMeanFieldModel::law_stats(std::size_t step, const EmpiricalLaw& law) const {
  if (!g_.reads_law()) return {};
  LawStats m(modes(), 0.0);
  for (std::size_t i = 0; i < law.size(); ++i) {
    const auto col = law.atom(i).column(step);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += law.weight(i) * col[k];
  }
  return m;
}

void HeatMeanFieldModel::coefficients(const ControlPoint& f, std::size_t step,
                                      const PathSample& history, const LawStats& stats,
                                      std::span<double> drift, std::span<double> vol) const {
  const double u = f[0];
  const double v = std::sqrt(v_low_ + u * (v_high_ - v_low_));
  const auto x = history.column(step);
  for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
    const double m = stats.empty() ? 0.0 : stats[k];
    drift[k] = amplitudes_[k] * g_(x[k], m, u);
    vol[k] = amplitudes_[k] * v;
  }
}

double HeatMeanFieldModel::declared_growth() const {
  double l2 = 0.0, mx = 0.0;
  for (double c : amplitudes_) {
    l2 += c * c;
    mx = std::max(mx, c);
  }
  return std::sqrt(l2) + mx * std::sqrt(v_high_);
}

std::optional<double> HeatMeanFieldModel::declared_lipschitz() const {
  return *std::max_element(amplitudes_.begin(), amplitudes_.end());
}

std::vector<double> HeatMeanFieldModel::declared_mode_bounds() const {
  std::vector<double> c(amplitudes_);
  for (double& x : c) x *= std::sqrt(1.0 + v_high_);
  return c;
}

// ---- linear model -----------------------------------------------------------

LinearModel::LinearModel(std::size_t K, double beta, double theta, double s)
    : K_(K), beta_(beta), theta_(theta), s_(s) {
  if (K == 0) throw Error(ErrorKind::InvalidArgument, "linear model needs K >= 1");
  if (!(theta >= 0.0) || !(s >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidArgument, "linear model needs theta >= 0, s >= 0");
  }
}

void LinearModel::coefficients(const ControlPoint&, std::size_t step, const PathSample& history,
                               const LawStats&, std::span<double> drift,
                               std::span<double> vol) const {
  const auto x = history.column(step);
  for (std::size_t k = 0; k < K_; ++k) {
    drift[k] = beta_ - theta_ * x[k];
    vol[k] = s_;
  }
}

double LinearModel::declared_growth() const {
  return std::abs(beta_) * std::sqrt(static_cast<double>(K_)) + s_ + theta_;
}

std::vector<double> LinearModel::declared_mode_bounds() const {
  const double c2 = std::max(2.0 * beta_ * beta_ + s_ * s_, 2.0 * theta_ * theta_);
  return std::vector<double>(K_, std::sqrt(c2));
}

double LinearModel::second_moment(double lambda, double x0, double T) const {
  const double rate = lambda + theta_;
  double mean, var;
  if (rate < 1e-8) {
    mean = x0 + beta_ * T;
    var = s_ * s_ * T;
  } else {
    const double decay = std::exp(-rate * T);
    mean = decay * x0 + beta_ * (-std::expm1(-rate * T)) / rate;
    var = s_ * s_ * (-std::expm1(-2.0 * rate * T)) / (2.0 * rate);
  }
  return mean * mean + var;
}

// ---- samplers ---------------------------------------------------------------

namespace {

PathSample random_walk(const NoiseStream& rng, std::uint32_t index, std::uint32_t slot,
                       std::size_t K, const TimeGrid& grid, double scale) {
  PathSample p(grid, K);
  const double step_sd = scale * std::sqrt(grid.dt());
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<std::uint32_t>(k);
    double x = scale * rng.normal(NoiseDomain::probes, index, slot, kk, 0);
    p(k, 0) = x;
    for (std::size_t j = 1; j <= grid.steps(); ++j) {
      x += step_sd * rng.normal(NoiseDomain::probes, index, slot, kk, static_cast<std::uint32_t>(j));
      p(k, j) = x;
    }
  }
  return p;
}

ControlPoint random_control(const NoiseStream& rng, std::uint32_t index, std::size_t m) {
  std::vector<double> f(m);
  for (std::size_t d = 0; d < m; ++d) {
    f[d] = rng.uniform(NoiseDomain::probes, index, 0xFFFFu, static_cast<std::uint32_t>(d), 1);
  }
  return ControlPoint(std::move(f));
}

std::size_t random_below(const NoiseStream& rng, std::uint32_t index, std::uint32_t tag,
                         std::size_t n) {
  const double u = rng.uniform(NoiseDomain::probes, index, 0xFFFEu, tag, 2);
  return std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
}

}  // namespace

ProbeSampler make_probe_sampler(const CoefficientModel& model, ProbeOptions options) {
  const std::size_t K = model.modes();
  const std::size_t m = model.control_dim();
  return [K, m, options](std::size_t index) {
    const NoiseStream rng(options.seed);
    const auto idx = static_cast<std::uint32_t>(index);
    const std::size_t step = random_below(rng, idx, 0, options.grid.nodes());
    const std::size_t atoms = 1 + random_below(rng, idx, 1, options.max_atoms);
    // Alternate between small and large magnitudes so both the constant and
    // the state-proportional parts of the bounds get exercised.
    const double scale = options.scale * ((index % 3 == 0) ? 10.0 : 1.0);
    std::vector<PathSample> law_atoms;
    for (std::size_t a = 0; a < atoms; ++a) {
      law_atoms.push_back(random_walk(rng, idx, static_cast<std::uint32_t>(a + 1), K, options.grid, scale));
    }
    return ProbeSample{random_control(rng, idx, m), step,
                       random_walk(rng, idx, 0, K, options.grid, scale),
                       EmpiricalLaw(std::move(law_atoms))};
  };
}

PairSampler make_pair_sampler(const CoefficientModel& model, ProbeOptions options) {
  const std::size_t K = model.modes();
  const std::size_t m = model.control_dim();
  return [K, m, options](std::size_t index) {
    const NoiseStream rng(options.seed);
    const auto idx = static_cast<std::uint32_t>(index);
    const std::size_t step = random_below(rng, idx, 0, options.grid.nodes());
    const std::size_t atoms = 1 + random_below(rng, idx, 1, options.max_atoms);
    const double scale = options.scale;
    PathSample omega = random_walk(rng, idx, 0, K, options.grid, scale);
    std::vector<PathSample> mu_atoms, nu_atoms;
    for (std::size_t a = 0; a < atoms; ++a) {
      mu_atoms.push_back(random_walk(rng, idx, static_cast<std::uint32_t>(a + 1), K, options.grid, scale));
    }
    // Mix of identical, nearby and unrelated pairs.
    const std::size_t mode = index % 4;
    PathSample alpha = omega;
    nu_atoms = mu_atoms;
    if (mode == 1) {
      const double eps = 0.05 * scale;
      PathSample d = random_walk(rng, idx, 1000, K, options.grid, eps);
      std::vector<double> v(omega.data().begin(), omega.data().end());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += d.data()[i];
      alpha = PathSample(options.grid, K, std::move(v));
      for (std::size_t a = 0; a < atoms; ++a) {
        PathSample da = random_walk(rng, idx, static_cast<std::uint32_t>(2000 + a), K, options.grid, eps);
        std::vector<double> w(mu_atoms[a].data().begin(), mu_atoms[a].data().end());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += da.data()[i];
        nu_atoms[a] = PathSample(options.grid, K, std::move(w));
      }
    } else if (mode >= 2) {
      alpha = random_walk(rng, idx, 3000, K, options.grid, scale);
      for (std::size_t a = 0; a < atoms; ++a) {
        nu_atoms[a] = random_walk(rng, idx, static_cast<std::uint32_t>(4000 + a), K, options.grid, scale);
      }
    }
    return ProbePair{random_control(rng, idx, m), step, std::move(omega),
                     EmpiricalLaw(std::move(mu_atoms)), std::move(alpha),
                     EmpiricalLaw(std::move(nu_atoms))};
  };
}

// ---- checkers ---------------------------------------------------------------

namespace {

void require_modes(const CoefficientModel& model, const SpectralSpace& space) {
  if (model.modes() != space.K()) {
    throw Error(ErrorKind::DimensionMismatch, "model has " + std::to_string(model.modes()) +
                                                  " modes but the space has K = " +
                                                  std::to_string(space.K()));
  }
}

EmpiricalLaw stop_at(const EmpiricalLaw& law, std::size_t step) {
  std::vector<PathSample> atoms;
  atoms.reserve(law.size());
  for (const auto& a : law.atoms()) atoms.push_back(stopped_path(a, step));
  return EmpiricalLaw(std::move(atoms), law.weights());
}

}  // namespace

ConditionReport check_growth(const CoefficientModel& model, const SpectralSpace& space,
                             const ProbeSampler& sampler, std::size_t n_samples) {
  require_modes(model, space);
  const double C = model.declared_growth();
  const double p = space.constants().p;
  const std::size_t K = model.modes();
  std::vector<double> b(K), s(K);
  ConditionReport rep;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ProbeSample x = sampler(i);
    model.coefficients(x.f, x.step, x.history, model.law_stats(x.step, x.law), b, s);
    double bn = 0.0, sop = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      bn += b[k] * b[k];
      sop = std::max(sop, std::abs(s[k]));
    }
    const double lhs = std::sqrt(bn) + sop;
    const double rhs =
        C * (1.0 + sup_norm_upto(x.history, x.step) + law_norm_upto(x.law, p, x.step));
    const double ratio = lhs == 0.0 ? 0.0 : (rhs > 0.0 ? lhs / rhs : INFINITY);
    if (ratio > rep.statistic) rep.statistic = ratio;
    if (ratio > 1.0 + 1e-12 && !rep.witness) rep.witness = i;
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  std::ostringstream os;
  os << "max ratio " << rep.statistic << " against declared C = " << C;
  rep.detail = os.str();
  return rep;
}

ConditionReport check_mode_bounds(const CoefficientModel& model, const SpectralSpace& space,
                                  const ProbeSampler& sampler, std::size_t n_samples) {
  require_modes(model, space);
  const double p = space.constants().p;
  const std::size_t K = model.modes();
  const auto c = space.c_bounds();
  std::vector<double> b(K), s(K);
  std::vector<double> worst_per_mode(K, 0.0);
  ConditionReport rep;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ProbeSample x = sampler(i);
    model.coefficients(x.f, x.step, x.history, model.law_stats(x.step, x.law), b, s);
    const double sn = sup_norm_upto(x.history, x.step);
    const double ln = law_norm_upto(x.law, p, x.step);
    const double growth = 1.0 + sn * sn + ln * ln;
    for (std::size_t k = 0; k < K; ++k) {
      const double lhs = b[k] * b[k] + s[k] * s[k];
      const double rhs = c[k] * c[k] * growth;
      const double ratio = lhs == 0.0 ? 0.0 : (rhs > 0.0 ? lhs / rhs : INFINITY);
      worst_per_mode[k] = std::max(worst_per_mode[k], ratio);
      if (ratio > rep.statistic) rep.statistic = ratio;
      if (ratio > 1.0 + 1e-12 && !rep.witness) {
        rep.witness = i;
        rep.witness_mode = k;
      }
    }
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  const auto worst = std::max_element(worst_per_mode.begin(), worst_per_mode.end());
  std::ostringstream os;
  os << "worst mode " << (worst - worst_per_mode.begin()) << " with ratio " << *worst;
  rep.detail = os.str();
  return rep;
}

ConditionReport check_lipschitz(const CoefficientModel& model, const SpectralSpace& space,
                                const PairSampler& sampler, std::size_t n_pairs) {
  require_modes(model, space);
  const auto declared = model.declared_lipschitz();
  if (!declared) throw Error(ErrorKind::NotDeclared, "model declares no Lipschitz constant");
  const double p = space.constants().p;
  const std::size_t K = model.modes();
  std::vector<double> b1(K), b2(K), s(K);
  ConditionReport rep;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const ProbePair x = sampler(i);
    model.coefficients(x.f, x.step, x.omega, model.law_stats(x.step, x.mu), b1, s);
    model.coefficients(x.f, x.step, x.alpha, model.law_stats(x.step, x.nu), b2, s);
    double num = 0.0;
    for (std::size_t k = 0; k < K; ++k) num += (b1[k] - b2[k]) * (b1[k] - b2[k]);
    num = std::sqrt(num);
    const double den = sup_norm_upto(x.omega - x.alpha, x.step) +
                       wasserstein_paths(stop_at(x.mu, x.step), stop_at(x.nu, x.step), p);
    if (den == 0.0) {
      if (num == 0.0) continue;  // identical inputs carry no information
      rep.statistic = INFINITY;
      if (!rep.witness) rep.witness = i;
      continue;
    }
    ++used;
    const double L = num / den;
    if (L > rep.statistic) rep.statistic = L;
    if (L > *declared * (1.0 + 1e-12) + 1e-15 && !rep.witness) rep.witness = i;
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  std::ostringstream os;
  os << "empirical L " << rep.statistic << " over " << used << " informative pairs (declared "
     << *declared << ")";
  rep.detail = os.str();
  return rep;
}

std::vector<ControlPoint> uniform_control_grid(std::size_t points) {
  if (points < 2) return {ControlPoint(0.0)};
  std::vector<ControlPoint> grid;
  grid.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid.emplace_back(static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

namespace {

double point_segment_distance(std::span<const double> x, std::span<const double> a,
                              std::span<const double> b) {
  double ab2 = 0.0, t = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ab2 += (b[i] - a[i]) * (b[i] - a[i]);
    t += (x[i] - a[i]) * (b[i] - a[i]);
  }
  t = ab2 > 0.0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = a[i] + t * (b[i] - a[i]);
    d2 += (x[i] - y) * (x[i] - y);
  }
  return std::sqrt(d2);
}

}  // namespace

ConditionReport check_convexity(const CoefficientModel& model, const ProbeSample& point,
                                const std::vector<ControlPoint>& f_grid,
                                ConvexityOptions options) {
  if (f_grid.empty()) throw Error(ErrorKind::InvalidArgument, "convexity check needs a control grid");
  const std::size_t K = model.modes();
  const std::size_t m = model.control_dim();
  const LawStats stats = model.law_stats(point.step, point.law);
  std::vector<double> b(K), s(K);
  auto image = [&](const ControlPoint& f) {
    model.coefficients(f, point.step, point.history, stats, b, s);
    std::vector<double> out(2 * K);
    for (std::size_t k = 0; k < K; ++k) {
      out[k] = b[k];
      out[K + k] = s[k] * s[k];
    }
    return out;
  };

  std::vector<ControlPoint> grid = f_grid;
  if (m == 1) {
    std::sort(grid.begin(), grid.end(),
              [](const ControlPoint& a, const ControlPoint& c) { return a[0] < c[0]; });
  }
  std::vector<std::vector<double>> pts;
  double scale = 0.0;
  for (const auto& f : grid) {
    pts.push_back(image(f));
    double n2 = 0.0;
    for (double v : pts.back()) n2 += v * v;
    scale = std::max(scale, std::sqrt(n2));
  }
  const double tol = options.tol_factor * (scale > 0.0 ? scale : 1.0);

  const NoiseStream rng(options.seed);
  ConditionReport rep;
  for (std::size_t i = 0; i < options.n_pairs; ++i) {
    std::vector<double> f1(m), f2(m);
    for (std::size_t d = 0; d < m; ++d) {
      f1[d] = rng.uniform(NoiseDomain::probes, static_cast<std::uint32_t>(i), 0xABCDu,
                          static_cast<std::uint32_t>(d), 0);
      f2[d] = rng.uniform(NoiseDomain::probes, static_cast<std::uint32_t>(i), 0xABCDu,
                          static_cast<std::uint32_t>(d), 1);
    }
    const auto p1 = image(ControlPoint(f1));
    const auto p2 = image(ControlPoint(f2));
    std::vector<double> target(2 * K);
    for (std::size_t k = 0; k < target.size(); ++k) target[k] = 0.5 * (p1[k] + p2[k]);
    double best = INFINITY;
    if (m == 1 && pts.size() >= 2) {
      for (std::size_t g = 0; g + 1 < pts.size(); ++g) {
        best = std::min(best, point_segment_distance(target, pts[g], pts[g + 1]));
      }
    } else {
      for (const auto& q : pts) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) d2 += (q[k] - target[k]) * (q[k] - target[k]);
        best = std::min(best, std::sqrt(d2));
      }
    }
    if (best > rep.statistic) rep.statistic = best;
    if (best > tol && !rep.witness) rep.witness = i;
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  std::ostringstream os;
  os << "max midpoint distance " << rep.statistic << " (tolerance " << tol << ")";
  rep.detail = os.str();
  return rep;
}

ConditionReport check_predictability(const CoefficientModel& model, const ProbeSampler& sampler,
                                     std::size_t n_samples) {
  const std::size_t K = model.modes();
  std::vector<double> b1(K), s1(K), b2(K), s2(K);
  ConditionReport rep;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ProbeSample x = sampler(i);
    model.coefficients(x.f, x.step, x.history, model.law_stats(x.step, x.law), b1, s1);

    PathSample mutated = x.history;
    for (std::size_t j = x.step + 1; j <= mutated.grid().steps(); ++j) {
      for (std::size_t k = 0; k < K; ++k) mutated(k, j) = 1e6 + static_cast<double>(j * K + k);
    }
    const EmpiricalLaw stopped = stop_at(x.law, x.step);
    model.coefficients(x.f, x.step, mutated, model.law_stats(x.step, stopped), b2, s2);
    const bool same = std::memcmp(b1.data(), b2.data(), K * sizeof(double)) == 0 &&
                      std::memcmp(s1.data(), s2.data(), K * sizeof(double)) == 0;
    if (!same && !rep.witness) rep.witness = i;
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  rep.detail = rep.witness ? "output changed after mutating the future" : "no output bit changed";
  return rep;
}

}  // namespace mflab
