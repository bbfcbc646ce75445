#pragma once

// Predictable feedback controls: maps (t, own path up to t) -> F = [0, 1].

#include <cstddef>
#include <string>
#include <vector>

#include "mflab/models.hpp"
#include "mflab/pathspace.hpp"

namespace mflab {

/// Scalar feature of the path history read by threshold and tabular controls.
struct Feature {
  enum class Kind { mode_value, sup_norm } kind = Kind::mode_value;
  std::size_t mode = 0;

  static Feature mode_value(std::size_t k) { return {Kind::mode_value, k}; }
  static Feature running_sup() { return {Kind::sup_norm, 0}; }

  /// Reads columns <= step only.
  double operator()(const PathSample& history, std::size_t step) const;
  std::string describe() const;
};

class FeedbackControl {
 public:
  enum class Kind { constant, schedule, threshold, tabular };

  static FeedbackControl constant(double f);
  /// Value values[i] on [b_i, b_{i+1}) with b_0 = 0; values has one more entry
  /// than breakpoints. Right-continuous at breakpoints.
  static FeedbackControl schedule(std::vector<double> breakpoints, std::vector<double> values);
  /// f_below when feature <= level, f_above otherwise.
  static FeedbackControl threshold(Feature feature, double level, double f_below, double f_above);
  /// `time_bins` equal bins over [0, T] times feature bins cut at the sorted
  /// `feature_edges`; table is row-major [time_bin][feature_bin]. A feature
  /// value equal to an edge falls in the upper bin.
  static FeedbackControl tabular(std::size_t time_bins, Feature feature,
                                 std::vector<double> feature_edges, std::vector<double> table);

  Kind kind() const { return kind_; }

  /// Control value at grid node `step`; reads history columns <= step only.
  ControlPoint evaluate(std::size_t step, const PathSample& history) const;
  double value(std::size_t step, const PathSample& history) const;

  /// True when the value does not depend on the path (constant, schedule).
  bool open_loop() const { return kind_ == Kind::constant || kind_ == Kind::schedule; }

  std::string describe() const;

 private:
  FeedbackControl() = default;

  Kind kind_ = Kind::constant;
  std::vector<double> breakpoints_;
  std::vector<double> values_;  // constant: {f}; schedule / tabular: pieces; threshold: {below, above}
  Feature feature_;
  double level_ = 0.0;
  std::size_t time_bins_ = 1;
};

/// Controls assigned to particles: particle i uses members[i % size], so a
/// single member means the control is shared.
using ControlTuple = std::vector<FeedbackControl>;

}  // namespace mflab
