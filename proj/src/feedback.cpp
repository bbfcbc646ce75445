#include "mflab/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mflab/error.hpp"

namespace mflab {

namespace {

void require_unit(double f, const char* what) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must lie in [0, 1]");
  }
}

}  // namespace

double Feature::operator()(const PathSample& history, std::size_t step) const {
  if (kind == Kind::sup_norm) return sup_norm_upto(history, step);
  if (mode >= history.modes()) {
    throw Error(ErrorKind::DimensionMismatch, "feature reads mode " + std::to_string(mode) +
                                                  " of a " + std::to_string(history.modes()) +
                                                  "-mode path");
  }
  return history(mode, step);
}

std::string Feature::describe() const {
  return kind == Kind::sup_norm ? "sup_norm" : "mode:" + std::to_string(mode);
}

FeedbackControl FeedbackControl::constant(double f) {
  require_unit(f, "constant control value");
  FeedbackControl c;
  c.kind_ = Kind::constant;
  c.values_ = {f};
  return c;
}

FeedbackControl FeedbackControl::schedule(std::vector<double> breakpoints,
                                          std::vector<double> values) {
  if (values.size() != breakpoints.size() + 1) {
    throw Error(ErrorKind::InvalidArgument, "schedule needs one more value than breakpoints");
  }
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
      std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end()) {
    throw Error(ErrorKind::InvalidArgument, "schedule breakpoints must be strictly increasing");
  }
  for (double v : values) require_unit(v, "schedule value");
  FeedbackControl c;
  c.kind_ = Kind::schedule;
  c.breakpoints_ = std::move(breakpoints);
  c.values_ = std::move(values);
  return c;
}

FeedbackControl FeedbackControl::threshold(Feature feature, double level, double f_below,
                                           double f_above) {
  require_unit(f_below, "f_below");
  require_unit(f_above, "f_above");
  if (!std::isfinite(level)) throw Error(ErrorKind::InvalidArgument, "threshold level must be finite");
  FeedbackControl c;
  c.kind_ = Kind::threshold;
  c.feature_ = feature;
  c.level_ = level;
  c.values_ = {f_below, f_above};
  return c;
}

FeedbackControl FeedbackControl::tabular(std::size_t time_bins, Feature feature,
                                         std::vector<double> feature_edges,
                                         std::vector<double> table) {
  if (time_bins == 0) throw Error(ErrorKind::InvalidArgument, "tabular control needs time bins");
  if (!std::is_sorted(feature_edges.begin(), feature_edges.end())) {
    throw Error(ErrorKind::InvalidArgument, "tabular feature edges must be sorted");
  }
  if (table.size() != time_bins * (feature_edges.size() + 1)) {
    throw Error(ErrorKind::InvalidArgument, "tabular control needs time_bins x (edges + 1) entries");
  }
  for (double v : table) require_unit(v, "tabular entry");
  FeedbackControl c;
  c.kind_ = Kind::tabular;
  c.time_bins_ = time_bins;
  c.feature_ = feature;
  c.breakpoints_ = std::move(feature_edges);
  c.values_ = std::move(table);
  return c;
}

double FeedbackControl::value(std::size_t step, const PathSample& history) const {
  const TimeGrid& grid = history.grid();
  switch (kind_) {
    case Kind::constant:
      return values_[0];
    case Kind::schedule: {
      const double t = grid.time(step);
      const auto piece = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) -
                         breakpoints_.begin();
      return values_[static_cast<std::size_t>(piece)];
    }
    case Kind::threshold:
      return feature_(history, step) <= level_ ? values_[0] : values_[1];
    case Kind::tabular: {
      const std::size_t tb =
          std::min(time_bins_ - 1, step * time_bins_ / std::max<std::size_t>(1, grid.steps()));
      const double x = feature_(history, step);
      const auto fb = static_cast<std::size_t>(
          std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
      return values_[tb * (breakpoints_.size() + 1) + fb];
    }
  }
  return 0.0;
}

ControlPoint FeedbackControl::evaluate(std::size_t step, const PathSample& history) const {
  return ControlPoint(value(step, history));
}

std::string FeedbackControl::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::constant:
      os << "constant(" << values_[0] << ")";
      break;
    case Kind::schedule:
      os << "schedule(" << breakpoints_.size() + 1 << " pieces)";
      break;
    case Kind::threshold:
      os << "threshold(" << feature_.describe() << " <= " << level_ << " ? " << values_[0]
         << " : " << values_[1] << ")";
      break;
    case Kind::tabular:
      os << "tabular(" << time_bins_ << "x" << breakpoints_.size() + 1 << ", "
         << feature_.describe() << ")";
      break;
  }
  return os.str();
}

}  // namespace mflab
