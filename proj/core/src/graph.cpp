#include "aggopt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace aggopt {

namespace {

constexpr double kZeroRealPart = 1e-9;
constexpr double kExtraEdgeProbability = 0.2;

}  // namespace

Graph::Graph(std::size_t n_nodes, std::span<const Edge> edges) : neighbors_(n_nodes) {
  if (n_nodes == 0) throw std::invalid_argument("graph must have at least one node");
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n_nodes || e.v >= n_nodes) {
      throw std::invalid_argument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                  ") references a node outside 0.." + std::to_string(n_nodes - 1));
    }
    if (e.u == e.v) throw std::invalid_argument("self-loop at node " + std::to_string(e.u));
    edges_.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    throw std::invalid_argument("duplicate edge (" + std::to_string(dup->u) + ", " + std::to_string(dup->v) + ")");
  }
  for (const Edge& e : edges_) {
    neighbors_[e.u].push_back(e.v);
    neighbors_[e.v].push_back(e.u);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

Matrix laplacian(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix lap = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    lap(u, v) = -1.0;
    lap(v, u) = -1.0;
    lap(u, u) += 1.0;
    lap(v, v) += 1.0;
  }
  return lap;
}

bool is_connected(const Graph& g) {
  std::vector<bool> seen(g.size(), false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t j : g.neighbors(i)) {
      if (!seen[j]) {
        seen[j] = true;
        ++visited;
        frontier.push(j);
      }
    }
  }
  return visited == g.size();
}

double lambda_bound(const Matrix& lap) {
  if (lap.rows() != lap.cols() || lap.rows() == 0) {
    throw std::invalid_argument("laplacian must be a non-empty square matrix");
  }
  const Eigen::Index n = lap.rows();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&best](std::complex<double> ev) {
    if (ev.real() > kZeroRealPart) best = std::min(best, ev.real());
  };

  if (lap.isApprox(lap.transpose(), 0.0)) {
    // Each Laplacian eigenpair (mu, v) spans an invariant plane of the block
    // matrix whose eigenvalues are the roots of t^2 - (1 + mu) t + mu^2.
    // Solving the quadratics avoids the sqrt(eps) error a dense solver makes
    // on the defective double root at mu = 1.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(lap, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation did not converge");
    for (double mu : solver.eigenvalues()) {
      const double b = 1.0 + mu;
      double disc = b * b - 4.0 * mu * mu;
      // mu carries rounding error, so a discriminant at noise level is a double root.
      if (std::abs(disc) <= 64.0 * std::numeric_limits<double>::epsilon() * b * b) disc = 0.0;
      if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        // Larger-magnitude root first, the other from the product mu^2.
        const double big = 0.5 * (b + std::copysign(root, b));
        consider(big);
        consider(big != 0.0 ? mu * mu / big : 0.5 * (b - std::copysign(root, b)));
      } else {
        consider({0.5 * b, 0.5 * std::sqrt(-disc)});
      }
    }
  } else {
    Matrix block = Matrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = Matrix::Identity(n, n) + lap;
    block.topRightCorner(n, n) = lap;
    block.bottomLeftCorner(n, n) = -lap;
    Eigen::EigenSolver<Matrix> solver(block, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue computation did not converge");
    for (const auto& ev : solver.eigenvalues()) consider(ev);
  }
  if (!std::isfinite(best)) throw std::domain_error("block matrix has no eigenvalue with positive real part");
  return best;
}

SpectralSummary spectral_summary(const Graph& g) {
  SpectralSummary s;
  s.laplacian = laplacian(g);
  s.is_connected = is_connected(g);
  if (s.is_connected) s.lambda_bound = lambda_bound(s.laplacian);
  return s;
}

Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph(n, edges);
}

Graph ring_graph(std::size_t n) {
  if (n < 3) return path_graph(n);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Graph(n, edges);
}

Graph random_connected_graph(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random graph needs at least one node");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  std::vector<Edge> edges;
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const std::size_t a = order[k];
    const std::size_t b = order[pick(rng)];
    present[a][b] = present[b][a] = true;
    edges.push_back({a, b});
  }
  std::bernoulli_distribution extra(kExtraEdgeProbability);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!present[i][j] && extra(rng)) edges.push_back({i, j});
    }
  }
  return Graph(n, edges);
}

}  // namespace aggopt
