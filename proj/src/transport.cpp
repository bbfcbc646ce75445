#include "mflab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mflab/error.hpp"

namespace mflab {

AssignmentResult solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorKind::DimensionMismatch, "assignment needs a square matrix");
  AssignmentResult res;
  if (n == 0) return res;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Row/column potentials, 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  res.col_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) res.col_of_row[row_of_col[j] - 1] = j - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost(i, res.col_of_row[i]);
  res.cost = total;
  return res;
}

namespace {

struct BasicCell {
  std::size_t row;
  std::size_t col;
  double mass;
};

class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   const CostMatrix& cost)
      : m_(supply.size()), n_(demand.size()), cost_(cost) {
    double max_abs = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) max_abs = std::max(max_abs, std::abs(cost(i, j)));
    tol_ = 1e-12 * std::max(1.0, max_abs);
    north_west_corner(supply, demand);
  }

  TransportResult run() {
    const std::size_t nodes = m_ + n_;
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    parent_edge_.assign(nodes, kNone);
    parent_node_.assign(nodes, kNone);
    depth_.assign(nodes, 0);

    const std::size_t cells = m_ * n_;
    const std::size_t block = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
    std::size_t next = 0;
    std::size_t pivots = 0;
    std::size_t degenerate_run = 0;
    const std::size_t max_pivots = 100 * (cells + nodes) + 1000;

    for (;;) {
      compute_tree();
      // Block pricing; falls back to first-improving (index order) after long
      // degenerate runs.
      const bool bland = degenerate_run > 20 * nodes;
      std::size_t enter = kNone;
      double best = -tol_;
      std::size_t scanned = 0;
      std::size_t pos = bland ? 0 : next;
      while (scanned < cells) {
        const std::size_t i = pos / n_;
        const std::size_t j = pos % n_;
        const double red = cost_(i, j) - u_[i] - v_[j];
        if (red < best) {
          best = red;
          enter = pos;
          if (bland) break;
        }
        ++scanned;
        pos = pos + 1 == cells ? 0 : pos + 1;
        if (!bland && enter != kNone && scanned % block == 0) break;
      }
      if (enter == kNone) break;
      next = pos;
      const double theta = pivot(enter / n_, enter % n_);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
      if (++pivots > max_pivots) {
        throw Error(ErrorKind::InvalidArgument, "transport simplex exceeded its pivot budget");
      }
    }

    TransportResult res;
    res.pivots = pivots;
    std::vector<BasicCell> sorted = basis_;
    std::sort(sorted.begin(), sorted.end(), [](const BasicCell& a, const BasicCell& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    double total = 0.0;
    for (const auto& b : sorted) {
      if (b.mass > 0.0) {
        total += b.mass * cost_(b.row, b.col);
        res.plan.push_back({b.row, b.col, b.mass});
      }
    }
    res.cost = total;
    return res;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void north_west_corner(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> a(supply.begin(), supply.end());
    std::vector<double> b(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    basis_.reserve(m_ + n_ - 1);
    for (;;) {
      const double x = std::max(0.0, std::min(a[i], b[j]));
      basis_.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if (i + 1 == m_ && j + 1 == n_) break;
      if (i + 1 == m_) {
        ++j;
      } else if (j + 1 == n_) {
        ++i;
      } else if (a[i] <= b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    adjacency_.assign(m_ + n_, {});
    for (std::size_t e = 0; e < basis_.size(); ++e) {
      adjacency_[basis_[e].row].push_back(e);
      adjacency_[m_ + basis_[e].col].push_back(e);
    }
  }

  std::size_t other_end(std::size_t e, std::size_t node) const {
    return node < m_ ? m_ + basis_[e].col : basis_[e].row;
  }

  // Potentials u_i + v_j = c_ij on basic cells, plus parent pointers of the
  // spanning tree rooted at row 0.
  void compute_tree() {
    const std::size_t nodes = m_ + n_;
    std::fill(parent_edge_.begin(), parent_edge_.end(), kNone);
    queue_.clear();
    queue_.push_back(0);
    parent_node_[0] = kNone;
    depth_[0] = 0;
    u_[0] = 0.0;
    std::vector<char>& seen = seen_;
    seen.assign(nodes, 0);
    seen[0] = 1;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const std::size_t node = queue_[head];
      for (std::size_t e : adjacency_[node]) {
        const std::size_t nb = other_end(e, node);
        if (seen[nb]) continue;
        seen[nb] = 1;
        parent_edge_[nb] = e;
        parent_node_[nb] = node;
        depth_[nb] = depth_[node] + 1;
        const double c = cost_(basis_[e].row, basis_[e].col);
        if (nb >= m_) {
          v_[nb - m_] = c - u_[node];
        } else {
          u_[nb] = c - v_[node - m_];
        }
        queue_.push_back(nb);
      }
    }
  }

  double pivot(std::size_t row, std::size_t col) {
    // Tree path from the column node to the row node; signs alternate
    // starting with '-' next to the entering cell.
    std::size_t a = m_ + col;
    std::size_t b = row;
    path_a_.clear();
    path_b_.clear();
    while (depth_[a] > depth_[b]) {
      path_a_.push_back(parent_edge_[a]);
      a = parent_node_[a];
    }
    while (depth_[b] > depth_[a]) {
      path_b_.push_back(parent_edge_[b]);
      b = parent_node_[b];
    }
    while (a != b) {
      path_a_.push_back(parent_edge_[a]);
      a = parent_node_[a];
      path_b_.push_back(parent_edge_[b]);
      b = parent_node_[b];
    }
    path_a_.insert(path_a_.end(), path_b_.rbegin(), path_b_.rend());

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = kNone;
    for (std::size_t k = 0; k < path_a_.size(); k += 2) {
      const double mass = basis_[path_a_[k]].mass;
      if (mass < theta) {
        theta = mass;
        leave = k;
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path_a_.size(); ++k) {
      double& mass = basis_[path_a_[k]].mass;
      mass = (k % 2 == 0) ? std::max(0.0, mass - theta) : mass + theta;
    }

    const std::size_t e = path_a_[leave];
    auto drop = [&](std::size_t node) {
      auto& adj = adjacency_[node];
      adj.erase(std::find(adj.begin(), adj.end(), e));
    };
    drop(basis_[e].row);
    drop(m_ + basis_[e].col);
    basis_[e] = {row, col, theta};
    adjacency_[row].push_back(e);
    adjacency_[m_ + col].push_back(e);
    return theta;
  }

  std::size_t m_;
  std::size_t n_;
  const CostMatrix& cost_;
  double tol_ = 0.0;
  std::vector<BasicCell> basis_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> u_, v_;
  std::vector<std::size_t> parent_edge_, parent_node_, depth_, queue_;
  std::vector<std::size_t> path_a_, path_b_;
  std::vector<char> seen_;
};

}  // namespace

TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                const CostMatrix& cost) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    throw Error(ErrorKind::DimensionMismatch, "cost matrix does not match marginals");
  }
  if (supply.empty() || demand.empty()) {
    throw Error(ErrorKind::InvalidArgument, "transport needs nonempty marginals");
  }
  double sa = 0.0, sb = 0.0;
  for (double x : supply) {
    if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "negative supply");
    sa += x;
  }
  for (double x : demand) {
    if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "negative demand");
    sb += x;
  }
  if (std::abs(sa - sb) > 1e-9 * std::max(sa, sb)) {
    throw Error(ErrorKind::InvalidArgument, "supply and demand totals differ");
  }
  TransportSimplex simplex(supply, demand, cost);
  return simplex.run();
}

}  // namespace mflab
