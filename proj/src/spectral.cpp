#include "mflab/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mflab/error.hpp"
#include "mflab/stats.hpp"

namespace mflab {

std::optional<std::string> constants_violation(double alpha, double p, double q, double rho,
                                               double T) {
  for (double v : {alpha, p, q, rho, T}) {
    if (!std::isfinite(v)) return "finite arguments";
  }
  if (!(alpha > 0.0 && alpha < 0.5)) return "alpha in (0, 1/2)";
  if (!(p > 1.0 / alpha)) return "p > 1/alpha";
  if (!(q >= 1.0 && q < p)) return "1 <= q < p";
  if (!(rho > 0.0 && rho < 1.0 - 2.0 / p)) return "0 < rho < 1 - 2/p";
  if (!(T > 0.0)) return "T > 0";
  return std::nullopt;
}

FrameworkConstants validate_constants(double alpha, double p, double q, double rho, double T) {
  if (auto bad = constants_violation(alpha, p, q, rho, T)) {
    throw Error(ErrorKind::ConstraintViolation, *bad);
  }
  return FrameworkConstants{alpha, p, q, rho, T};
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

SpectralSpace::SpectralSpace(std::vector<double> lambdas, std::vector<double> c_bounds,
                             FrameworkConstants constants, double riesz_low, double riesz_high)
    : lambdas_(std::move(lambdas)),
      c_bounds_(std::move(c_bounds)),
      riesz_low_(riesz_low),
      riesz_high_(riesz_high),
      constants_(validate_constants(constants.alpha, constants.p, constants.q, constants.rho,
                                    constants.T)) {
  if (lambdas_.empty()) throw Error(ErrorKind::InvalidArgument, "K must be positive");
  if (c_bounds_.size() != lambdas_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "c_bounds must have K entries");
  }
  for (double l : lambdas_) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw Error(ErrorKind::InvalidArgument, "eigenvalues must be finite and > 0");
    }
  }
  for (double c : c_bounds_) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Error(ErrorKind::InvalidArgument, "mode bounds must be finite and >= 0");
    }
  }
  if (!(riesz_low_ > 0.0 && riesz_low_ <= riesz_high_ && std::isfinite(riesz_high_))) {
    throw Error(ErrorKind::InvalidArgument, "need 0 < riesz_low <= riesz_high");
  }
}

namespace {

std::string strip(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (!std::isspace(static_cast<unsigned char>(ch))) out.push_back(ch);
  }
  return out;
}

double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "cannot parse number '" + std::string(s) + "' in '" + std::string(context) + "'");
  }
  return v;
}

}  // namespace

std::vector<double> expand_mode_sequence(std::string_view spec, std::size_t K) {
  const std::string s = strip(spec);
  if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty mode sequence");

  if (s.find(',') != std::string::npos) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
      auto end = s.find(',', start);
      if (end == std::string::npos) end = s.size();
      out.push_back(parse_number(std::string_view(s).substr(start, end - start), spec));
      start = end + 1;
    }
    if (out.size() != K) {
      throw Error(ErrorKind::DimensionMismatch, "list '" + std::string(spec) + "' has " +
                                                    std::to_string(out.size()) +
                                                    " entries, expected K = " + std::to_string(K));
    }
    return out;
  }

  // Product of factors: number | pi | k, each optionally raised to ^exponent.
  struct Factor {
    enum { number, pi, k } base;
    double value;
    double exponent;
  };
  std::vector<Factor> factors;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('*', start);
    if (end == std::string::npos) end = s.size();
    std::string_view tok = std::string_view(s).substr(start, end - start);
    if (tok.empty()) throw Error(ErrorKind::InvalidArgument, "bad generator '" + s + "'");
    double exponent = 1.0;
    if (auto caret = tok.find('^'); caret != std::string_view::npos) {
      exponent = parse_number(tok.substr(caret + 1), spec);
      tok = tok.substr(0, caret);
    }
    if (tok == "k") {
      factors.push_back({Factor::k, 0.0, exponent});
    } else if (tok == "pi") {
      factors.push_back({Factor::pi, std::numbers::pi, exponent});
    } else {
      factors.push_back({Factor::number, parse_number(tok, spec), exponent});
    }
    start = end + 1;
  }

  std::vector<double> out(K);
  for (std::size_t i = 0; i < K; ++i) {
    const double k = static_cast<double>(i + 1);
    double v = 1.0;
    for (const auto& f : factors) {
      const double base = f.base == Factor::k ? k : f.value;
      v *= f.exponent == 1.0 ? base : std::pow(base, f.exponent);
    }
    out[i] = v;
  }
  return out;
}

ConditionReport summation_condition(const SpectralSpace& space) {
  const double rho = space.constants().rho;
  const std::size_t K = space.K();
  std::vector<double> terms(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double c = space.c_bounds()[k];
    terms[k] = c * c * std::pow(space.lambdas()[k], -rho);
  }
  ConditionReport rep;
  rep.partial_sum = kahan_sum(terms);

  // Fit log(term) = a - s log(k) over the last K/4 positive terms.
  const std::size_t window = K / 4;
  std::vector<double> xs, ys;
  for (std::size_t k = K - window; k < K; ++k) {
    if (terms[k] > 0.0) {
      xs.push_back(std::log(static_cast<double>(k + 1)));
      ys.push_back(std::log(terms[k]));
    }
  }
  if (xs.size() < 3) {
    rep.verdict = Verdict::pass;
    rep.tail_bound = 0.0;
    rep.detail = window == 0 || xs.empty() ? "finite sum; no tail to extrapolate"
                                           : "too few positive tail terms; treated as finite";
    return rep;
  }
  const LinearFit fit = least_squares(xs, ys);
  const double s = -fit.slope;
  rep.statistic = s;
  std::ostringstream os;
  os << "fitted tail exponent " << s << " (r^2 = " << fit.r_squared << ")";
  rep.detail = os.str();

  constexpr double kBoundaryBand = 0.05;
  if (fit.r_squared < 0.9 || std::abs(s - 1.0) <= kBoundaryBand) {
    rep.verdict = Verdict::inconclusive;
    rep.tail_bound = std::numeric_limits<double>::infinity();
    return rep;
  }
  if (s < 1.0) {
    rep.verdict = Verdict::fail;
    rep.witness = K;
    rep.tail_bound = std::numeric_limits<double>::infinity();
    return rep;
  }
  // sum_{k>K} A k^-s <= A K^(1-s) / (s-1)
  const double A = std::exp(fit.intercept);
  rep.verdict = Verdict::pass;
  rep.tail_bound = A * std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0);
  return rep;
}

std::vector<double> semigroup_apply(const SpectralSpace& space, double t,
                                    std::span<const double> coeffs) {
  if (coeffs.size() != space.K()) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient vector length != K");
  }
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "semigroup time must be >= 0");
  std::vector<double> out(coeffs.begin(), coeffs.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::exp(-space.lambdas()[k] * t);
  return out;
}

double kappa(const SpectralSpace& space, double t, double C) {
  double acc = 0.0;
  for (std::size_t k = 0; k < space.K(); ++k) {
    const double c = space.c_bounds()[k];
    acc += std::exp(-2.0 * space.lambdas()[k] * t) * c * c;
  }
  return C * std::sqrt(acc);
}

QuadratureResult dz_integral(const SpectralSpace& space, double alpha, double C) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw Error(ErrorKind::ConstraintViolation, "alpha in (0, 1/2)");
  }
  const double T = space.constants().T;
  const double gamma = 1.0 / (1.0 - 2.0 * alpha);
  // With s = T u^gamma the weight s^(-2 alpha) ds becomes T^(1-2alpha) gamma du.
  const double jac = std::pow(T, 1.0 - 2.0 * alpha) * gamma;
  auto g = [&](double u) {
    const double s = T * std::pow(u, gamma);
    double acc = 0.0;
    for (std::size_t k = 0; k < space.K(); ++k) {
      const double c = space.c_bounds()[k];
      if (c != 0.0) acc += c * c * std::exp(-2.0 * space.lambdas()[k] * s);
    }
    return C * C * jac * acc;
  };

  std::size_t n = 64;
  double h = 1.0 / static_cast<double>(n);
  double sum_inner = 0.0;
  for (std::size_t j = 1; j < n; ++j) sum_inner += g(static_cast<double>(j) * h);
  const double ends = 0.5 * (g(0.0) + g(1.0));
  double trap = h * (ends + sum_inner);
  double simpson_prev = std::numeric_limits<double>::quiet_NaN();
  double simpson = trap;

  constexpr std::size_t kMaxIntervals = std::size_t{1} << 20;
  for (;;) {
    // Halve h, adding the new midpoints to the running trapezoid sum.
    double mids = 0.0;
    for (std::size_t j = 0; j < n; ++j) mids += g((static_cast<double>(j) + 0.5) * h);
    sum_inner += mids;
    n *= 2;
    h *= 0.5;
    const double trap_next = h * (ends + sum_inner);
    simpson_prev = simpson;
    simpson = (4.0 * trap_next - trap) / 3.0;
    trap = trap_next;
    const double diff = std::abs(simpson - simpson_prev);
    const double scale = std::abs(simpson);
    if (n >= 512 && diff <= 1e-11 * scale) break;
    if (scale == 0.0 && diff == 0.0) break;
    if (n >= kMaxIntervals) {
      if (diff > 0.01 * scale) {
        throw Error(ErrorKind::QuadratureUnstable,
                    "successive refinements disagree by more than 1%");
      }
      break;
    }
  }
  return QuadratureResult{simpson, std::abs(simpson - simpson_prev) / 15.0, n + 1};
}

HNorm h_norm(const SpectralSpace& space, std::span<const double> coeffs) {
  if (coeffs.size() != space.K()) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient vector length != K");
  }
  double acc = 0.0;
  for (double c : coeffs) acc += c * c;
  const double e = std::sqrt(acc);
  if (space.orthonormal()) return HNorm{e, e, e};
  return HNorm{e, e / std::sqrt(space.riesz_high()), e / std::sqrt(space.riesz_low())};
}

}  // namespace mflab
