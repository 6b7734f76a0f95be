#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "astrogate/common.hpp"

namespace astrogate {

struct Edge {
  std::size_t i;
  std::size_t j;  // i < j
};

/// Astrocyte network embedded on a 3D integer lattice with 6-neighbour coupling.
///
/// Cells are indexed row-major over (x, y, z): index = (x * ny + y) * nz + z.
/// Boundary cells simply lose their exterior edges (no-flux boundary).
class AstrocyteGraph {
 public:
  AstrocyteGraph() = default;

  AstrocyteGraph(std::array<std::size_t, 3> dims, double spacing_h) : dims_(dims), spacing_(spacing_h) {
    for (auto d : dims)
      if (d == 0) throw ValidationError("lattice dimension must be >= 1");
    if (!(spacing_h > 0.0)) throw ValidationError("lattice spacing must be > 0");
    const auto [nx, ny, nz] = dims;
    n_ = nx * ny * nz;
    coords_.reserve(n_);
    neighbors_.assign(n_, {});
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t z = 0; z < nz; ++z) coords_.push_back({x, y, z});
    auto link = [&](std::size_t a, std::size_t b) {
      edges_.push_back({a, b});
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
    };
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t z = 0; z < nz; ++z) {
          const std::size_t a = index_of(x, y, z);
          if (x + 1 < nx) link(a, index_of(x + 1, y, z));
          if (y + 1 < ny) link(a, index_of(x, y + 1, z));
          if (z + 1 < nz) link(a, index_of(x, y, z + 1));
        }
  }

  std::size_t n_cells() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::array<std::size_t, 3>& dims() const { return dims_; }
  double spacing() const { return spacing_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t cell) const { return neighbors_.at(cell); }
  const std::array<std::size_t, 3>& coordinates(std::size_t cell) const { return coords_.at(cell); }

  std::size_t index_of(std::size_t x, std::size_t y, std::size_t z) const {
    return (x * dims_[1] + y) * dims_[2] + z;
  }

  /// Cell at the integer centre of the box (floor of dims / 2 on each axis).
  std::size_t center_cell() const { return index_of(dims_[0] / 2, dims_[1] / 2, dims_[2] / 2); }

  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (const auto& e : edges_) {
      a(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = 1.0;
      a(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = 1.0;
    }
    return a;
  }

  /// Unweighted L = D - A.
  Eigen::MatrixXd laplacian() const {
    Eigen::MatrixXd a = adjacency();
    Eigen::MatrixXd l = -a;
    l.diagonal() = a.rowwise().sum();
    return l;
  }

  /// BFS hop distance from `source`; unreachable cells get SIZE_MAX.
  std::vector<std::size_t> hop_distances(std::size_t source) const {
    std::vector<std::size_t> dist(n_, std::numeric_limits<std::size_t>::max());
    std::queue<std::size_t> frontier;
    dist.at(source) = 0;
    frontier.push(source);
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (auto v : neighbors_[u]) {
        if (dist[v] == std::numeric_limits<std::size_t>::max()) {
          dist[v] = dist[u] + 1;
          frontier.push(v);
        }
      }
    }
    return dist;
  }

  bool connected() const {
    if (n_ == 0) return false;
    for (auto d : hop_distances(0))
      if (d == std::numeric_limits<std::size_t>::max()) return false;
    return true;
  }

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  double spacing_ = 1.0;
  std::size_t n_ = 0;
  std::vector<std::array<std::size_t, 3>> coords_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

inline AstrocyteGraph build_lattice(std::array<std::size_t, 3> dims, double spacing_h) {
  return AstrocyteGraph(dims, spacing_h);
}

/// Conductance-weighted Laplacian D_g - G, one conductance per edge in graph.edges() order.
inline Eigen::MatrixXd weighted_laplacian(const AstrocyteGraph& graph, std::span<const double> conductances) {
  if (conductances.size() != graph.n_edges())
    throw ValidationError("weighted_laplacian: expected one conductance per edge");
  const auto n = static_cast<Eigen::Index>(graph.n_cells());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < conductances.size(); ++k) {
    const double g = conductances[k];
    if (!(g >= 0.0)) throw ValidationError("weighted_laplacian: conductance must be >= 0");
    const auto i = static_cast<Eigen::Index>(graph.edges()[k].i);
    const auto j = static_cast<Eigen::Index>(graph.edges()[k].j);
    l(i, j) -= g;
    l(j, i) -= g;
    l(i, i) += g;
    l(j, j) += g;
  }
  return l;
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration; stops when the
/// Rayleigh quotient changes by less than `rel_tol` relative.
inline double lambda_max_power(const Eigen::MatrixXd& m, double rel_tol = 1e-6, int max_iter = 100000) {
  const auto n = m.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v(n);
  // Alternating, slightly irregular start: overlaps the top eigenvector of lattice Laplacians.
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = ((i % 2 == 0) ? 1.0 : -1.0) * (1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0));
  v.normalize();
  double lambda = v.dot(m * v);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(m * v);
    if (std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace astrogate
