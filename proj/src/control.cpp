#include "mflab/control.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <optional>
#include <sstream>

#include "mflab/error.hpp"
#include "mflab/parallel.hpp"

namespace mflab {

ControlFamily::ControlFamily(std::vector<ControlTuple> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorKind::EmptySet, "control family is empty");
  for (const auto& m : members_) {
    if (m.empty()) throw Error(ErrorKind::EmptySet, "control tuple is empty");
  }
}

ControlFamily ControlFamily::shared(std::vector<FeedbackControl> controls) {
  std::vector<ControlTuple> members;
  members.reserve(controls.size());
  for (auto& c : controls) members.push_back(ControlTuple{std::move(c)});
  return ControlFamily(std::move(members));
}

TestFunction::TestFunction(std::string name, double clip) : name_(std::move(name)), clip_(clip) {
  if (name_ == "one") {
    kind_ = Kind::one;
  } else if (name_ == "clipped_square") {
    kind_ = Kind::clipped_square;
    if (!(clip_ > 0.0) || !std::isfinite(clip_)) {
      throw Error(ErrorKind::InvalidArgument, "clipped_square needs a finite clip > 0");
    }
  } else if (name_ == "tanh") {
    kind_ = Kind::tanh;
  } else if (name_ == "cos") {
    kind_ = Kind::cos;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown test function '" + name_ + "'");
  }
}

double TestFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::one: return 1.0;
    case Kind::clipped_square: return std::min(x * x, clip_);
    case Kind::tanh: return std::tanh(x);
    case Kind::cos: return std::cos(x);
  }
  return 0.0;
}

double TestFunction::sup_abs() const { return kind_ == Kind::clipped_square ? clip_ : 1.0; }

Psi Psi::terminal_moment(double r, double q) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "terminal_moment needs r > 0");
  if (r > q) {
    throw Error(ErrorKind::GrowthViolation, "terminal_moment order r = " + std::to_string(r) +
                                                " exceeds q = " + std::to_string(q));
  }
  return Psi(Kind::terminal_moment, r, TestFunction("one"));
}

Psi Psi::terminal_mean_payoff(TestFunction phi) {
  return Psi(Kind::terminal_mean_payoff, 0.0, std::move(phi));
}

Psi Psi::running_integral(TestFunction phi) {
  return Psi(Kind::running_integral, 0.0, std::move(phi));
}

Psi Psi::shifted(double c) const {
  Psi out = *this;
  out.offset_ += c;
  return out;
}

double Psi::per_atom(const PathSample& path) const {
  const std::size_t N = path.grid().steps();
  switch (kind_) {
    case Kind::terminal_moment: {
      double n2 = 0.0;
      for (double x : path.column(N)) n2 += x * x;
      return r_ == 2.0 ? n2 : std::pow(std::sqrt(n2), r_);
    }
    case Kind::terminal_mean_payoff:
      return phi_(path(0, N));
    case Kind::running_integral: {
      double acc = 0.5 * (phi_(path(0, 0)) + phi_(path(0, N)));
      for (std::size_t j = 1; j < N; ++j) acc += phi_(path(0, j));
      return acc * path.grid().dt();
    }
  }
  return 0.0;
}

double Psi::operator()(const EmpiricalLaw& mu) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += mu.weight(i) * per_atom(mu.atom(i));
  return acc + offset_;
}

double Psi::growth_constant(double T) const {
  switch (kind_) {
    case Kind::terminal_moment: return 1.0 + std::abs(offset_);
    case Kind::terminal_mean_payoff: return phi_.sup_abs() + std::abs(offset_);
    case Kind::running_integral: return phi_.sup_abs() * T + std::abs(offset_);
  }
  return 0.0;
}

std::string Psi::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::terminal_moment: os << "terminal_moment(" << r_ << ")"; break;
    case Kind::terminal_mean_payoff: os << "terminal_mean_payoff(" << phi_.name() << ")"; break;
    case Kind::running_integral: os << "running_integral(" << phi_.name() << ")"; break;
  }
  if (offset_ != 0.0) os << " + " << offset_;
  return os.str();
}

ConditionReport check_control_predictability(const FeedbackControl& control,
                                             const ProbeSampler& sampler, std::size_t n_samples) {
  ConditionReport rep;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ProbeSample x = sampler(i);
    const double before = control.value(x.step, x.history);
    PathSample mutated = x.history;
    for (std::size_t j = x.step + 1; j <= mutated.grid().steps(); ++j) {
      for (std::size_t k = 0; k < mutated.modes(); ++k) mutated(k, j) = -1e6 - static_cast<double>(j);
    }
    const double after = control.value(x.step, mutated);
    if (std::memcmp(&before, &after, sizeof(double)) != 0 && !rep.witness) rep.witness = i;
  }
  rep.verdict = rep.witness ? Verdict::fail : Verdict::pass;
  rep.detail = control.describe();
  return rep;
}

double ValueReport::paired_se(std::size_t i, std::size_t j) const {
  const auto& a = samples.at(i);
  const auto& b = samples.at(j);
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return mean_estimate(d).std_error;
}

ValueReport value_estimate(const ValueProblem& problem, const ControlFamily& family,
                           const SimConfig& cfg) {
  validate(cfg);
  const Dynamics dyn{problem.model, problem.lambdas};
  const std::size_t C = family.size();
  ValueReport rep;
  rep.seed = cfg.seed;
  rep.samples.assign(C, {});

  if (problem.n_particles == 0) {
    // Mean-field value: psi is linear, so E over the MKV law is the atom mean.
    for (std::size_t c = 0; c < C; ++c) {
      const MkvResult mkv = solve_mkv(dyn, family[c], problem.x0, cfg);
      auto& s = rep.samples[c];
      s.reserve(mkv.law.size());
      for (const auto& a : mkv.law.atoms()) s.push_back(problem.psi.per_atom(a));
      for (double& v : s) v += problem.psi.offset();
    }
  } else {
    const std::size_t R = cfg.replications;
    for (auto& s : rep.samples) s.assign(R, 0.0);
    const NoiseStream noise(cfg.seed);
    // The control index is deliberately not part of the noise key (CRN).
    parallel_for(C * R, cfg.threads, [&](std::size_t task) {
      const std::size_t c = task / R, r = task % R;
      const EmpiricalLaw draw = integrate_system(
          dyn, family[c], problem.x0, problem.n_particles, cfg.grid, noise,
          NoiseKey{NoiseDomain::particles, static_cast<std::uint32_t>(r), 1});
      rep.samples[c][r] = problem.psi(draw);
    });
  }

  for (std::size_t c = 0; c < C; ++c) {
    rep.estimates.push_back(mean_estimate(rep.samples[c]));
    if (c == 0 || rep.estimates[c].value > rep.sup) {
      rep.sup = rep.estimates[c].value;
      rep.argmax = c;
    }
  }
  return rep;
}

EpsilonCertificate epsilon_optimal(const ValueReport& report, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be > 0");
  const std::size_t C = report.estimates.size();
  double family_mc = 0.0;
  std::vector<double> mc(C, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    if (i != report.argmax) mc[i] = 2.0 * report.paired_se(i, report.argmax);
    family_mc = std::max(family_mc, mc[i]);
  }
  if (family_mc > 0.5 * eps) {
    std::ostringstream os;
    os << "Monte-Carlo error " << family_mc << " exceeds eps/2 = " << 0.5 * eps;
    throw Error(ErrorKind::InconclusiveAtBudget, os.str());
  }
  EpsilonCertificate cert;
  cert.argmax = report.argmax;
  cert.index = report.argmax;
  for (std::size_t i = 0; i < C; ++i) {
    const double gap = report.sup - report.estimates[i].value;
    if (gap + mc[i] <= eps) {
      cert.index = i;
      break;
    }
  }
  cert.gap = report.sup - report.estimates[cert.index].value;
  cert.mc_error = mc[cert.index];
  cert.certified_eps = cert.gap + cert.mc_error;
  cert.estimate_se = report.estimates[cert.index].std_error;
  return cert;
}

EpsilonCertificate epsilon_optimal(const ValueProblem& problem, const ControlFamily& family,
                                   double eps, const SimConfig& cfg) {
  return epsilon_optimal(value_estimate(problem, family, cfg), eps);
}

}  // namespace mflab
