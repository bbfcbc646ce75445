#pragma once

// Exact discrete optimal transport: a Hungarian solver for square assignment
// problems and a network simplex on the bipartite transportation graph for
// arbitrary marginals.

#include <cstddef>
#include <span>
#include <vector>

namespace mflab {

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct AssignmentResult {
  double cost = 0.0;                 // sum of c(i, col_of_row[i])
  std::vector<std::size_t> col_of_row;
};

/// Minimum-cost perfect matching on a square cost matrix, O(n^3).
AssignmentResult solve_assignment(const CostMatrix& cost);

struct TransportFlow {
  std::size_t row;
  std::size_t col;
  double mass;
};

struct TransportResult {
  double cost = 0.0;
  std::vector<TransportFlow> plan;  // basic cells, sorted by (row, col)
  std::size_t pivots = 0;
};

/// Minimum of sum pi_ij c_ij over couplings of `supply` and `demand` (both
/// nonnegative with equal totals). Network simplex with block pricing,
/// started from the north-west corner basis.
TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                const CostMatrix& cost);

}  // namespace mflab
