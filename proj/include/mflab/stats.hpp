#pragma once

#include <cstddef>
#include <span>

namespace mflab {

double kahan_sum(std::span<const double> xs);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Sample mean with the standard error of the mean (n-1 denominator).
Estimate mean_estimate(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;  // two-sided 95% interval on the slope (Student t)
  double ci_high = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two points;
/// the confidence interval needs three.
LinearFit least_squares(std::span<const double> xs, std::span<const double> ys);

}  // namespace mflab
