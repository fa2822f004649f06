#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pgs {

inline constexpr double kShiftSymmetryTol = 1e-12;
inline constexpr double kLaplacianRowSumTol = 1e-10;

/// Undirected weighted edge; endpoints are 0-based and stored with i < j.
/// One entry represents both directions.
struct GraphEdge {
  int i = 0;
  int j = 0;
  double w = 1.0;
};

/// Undirected weighted graph stored edge-list-first. Dense shift operators
/// are materialized explicitly and on demand (adjacency / laplacian below).
struct Graph {
  int n = 0;
  std::vector<GraphEdge> edges;
};

inline void validate(const Graph& g) {
  if (g.n <= 0) {
    throw std::invalid_argument("graph: vertex count must be positive");
  }
  for (const auto& e : g.edges) {
    if (e.i < 0 || e.j >= g.n || e.i >= e.j) {
      throw std::invalid_argument(
          "graph: edge endpoints must satisfy 0 <= i < j < n");
    }
    if (!(e.w > 0.0)) {
      throw std::invalid_argument("graph: edge weights must be strictly positive");
    }
  }
  std::vector<std::pair<int, int>> seen;
  seen.reserve(g.edges.size());
  for (const auto& e : g.edges) seen.emplace_back(e.i, e.j);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw std::invalid_argument("graph: duplicate edge");
  }
}

/// Weight of edge {a, b}; zero when absent. Symmetric in its arguments.
inline double edge_weight(const Graph& g, int a, int b) {
  const int lo = std::min(a, b), hi = std::max(a, b);
  for (const auto& e : g.edges) {
    if (e.i == lo && e.j == hi) return e.w;
  }
  return 0.0;
}

enum class ShiftKind { adjacency, laplacian };

/// Dense symmetric graph-shift operator.
struct ShiftOperator {
  int n = 0;
  Eigen::MatrixXd values;
  ShiftKind kind = ShiftKind::adjacency;
};

inline void validate(const ShiftOperator& s) {
  if (s.n <= 0 || s.values.rows() != s.n || s.values.cols() != s.n) {
    throw std::invalid_argument("shift operator: dimension mismatch");
  }
  const double asym = (s.values - s.values.transpose()).cwiseAbs().maxCoeff();
  if (asym > kShiftSymmetryTol) {
    throw std::invalid_argument("shift operator: matrix is not symmetric");
  }
  if (s.kind == ShiftKind::laplacian) {
    const double row_sum = s.values.rowwise().sum().cwiseAbs().maxCoeff();
    if (row_sum > kLaplacianRowSumTol) {
      throw std::invalid_argument("shift operator: laplacian rows must sum to zero");
    }
    if (s.values.diagonal().minCoeff() < 0.0) {
      throw std::invalid_argument("shift operator: laplacian diagonal must be nonnegative");
    }
  }
}

inline ShiftOperator adjacency(const Graph& g) {
  validate(g);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n, g.n);
  for (const auto& e : g.edges) {
    a(e.i, e.j) = e.w;
    a(e.j, e.i) = e.w;
  }
  return {g.n, std::move(a), ShiftKind::adjacency};
}

inline Eigen::VectorXd degree_vector(const Graph& g) {
  validate(g);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(g.n);
  for (const auto& e : g.edges) {
    d[e.i] += e.w;
    d[e.j] += e.w;
  }
  return d;
}

inline ShiftOperator laplacian(const Graph& g) {
  ShiftOperator a = adjacency(g);
  Eigen::MatrixXd l = -a.values;
  l.diagonal() += degree_vector(g);
  return {g.n, std::move(l), ShiftKind::laplacian};
}

inline ShiftOperator make_shift(const Graph& g, ShiftKind kind) {
  return kind == ShiftKind::adjacency ? adjacency(g) : laplacian(g);
}

/// Cycle graph on n >= 3 vertices with unit weights.
inline Graph build_cycle_graph(int n) {
  if (n < 3) {
    throw std::invalid_argument(
        "build_cycle_graph: need n >= 3 (a 2-cycle would duplicate an edge)");
  }
  Graph g{n, {}};
  g.edges.reserve(n);
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
  g.edges.push_back({0, n - 1, 1.0});
  return g;
}

enum class Metric { euclidean, cosine };

/// Symmetrized (union) unweighted k-nearest-neighbor graph over the rows of
/// `points`. Ties in distance are broken by the lower candidate index, which
/// makes the construction deterministic.
inline Graph build_knn_graph(const Eigen::MatrixXd& points, int k,
                             Metric metric) {
  const int m = int(points.rows());
  if (k < 1) {
    throw std::invalid_argument("build_knn_graph: k must be positive");
  }
  if (k >= m) {
    throw std::invalid_argument("build_knn_graph: need k < number of points");
  }
  if (points.cols() < 1) {
    throw std::invalid_argument("build_knn_graph: points need at least one feature");
  }

  Eigen::MatrixXd dist(m, m);
  if (metric == Metric::euclidean) {
    const Eigen::VectorXd sq = points.rowwise().squaredNorm();
    dist.noalias() = -2.0 * points * points.transpose();
    dist.colwise() += sq;
    dist.rowwise() += sq.transpose();
    dist = dist.cwiseMax(0.0);  // squared distances; ordering is unchanged
  } else {
    const Eigen::VectorXd norms = points.rowwise().norm();
    if (norms.minCoeff() <= 0.0) {
      throw std::invalid_argument(
          "build_knn_graph: zero-norm vector under cosine metric");
    }
    const Eigen::MatrixXd unit = norms.cwiseInverse().asDiagonal() * points;
    dist.noalias() = -(unit * unit.transpose());  // 1 - cos, minus the constant
  }

  std::vector<std::pair<int, int>> edges;
  edges.reserve(std::size_t(m) * std::size_t(k));
  std::vector<std::pair<double, int>> cand;
  cand.reserve(m - 1);
  for (int i = 0; i < m; ++i) {
    cand.clear();
    for (int j = 0; j < m; ++j) {
      if (j != i) cand.emplace_back(dist(i, j), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) {
      const int j = cand[t].second;
      edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g{m, {}};
  g.edges.reserve(edges.size());
  for (const auto& [i, j] : edges) g.edges.push_back({i, j, 1.0});
  validate(g);
  return g;
}

}  // namespace pgs
