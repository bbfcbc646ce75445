#include "mflab/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "mflab/error.hpp"

namespace mflab {

double kahan_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

Estimate mean_estimate(std::span<const double> xs) {
  Estimate e;
  e.samples = xs.size();
  if (xs.empty()) return e;
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  e.value = mean;
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  e.std_error = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::DegenerateFit, "least squares needs at least two paired points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::DegenerateFit, "abscissae are all equal");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (xs.size() >= 3) {
    const double dof = n - 2.0;
    fit.slope_se = std::sqrt(sse / dof / sxx);
    boost::math::students_t dist(dof);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.ci_low = fit.slope - t * fit.slope_se;
    fit.ci_high = fit.slope + t * fit.slope_se;
  } else {
    fit.slope_se = std::numeric_limits<double>::infinity();
    fit.ci_low = -std::numeric_limits<double>::infinity();
    fit.ci_high = std::numeric_limits<double>::infinity();
  }
  return fit;
}

}  // namespace mflab
