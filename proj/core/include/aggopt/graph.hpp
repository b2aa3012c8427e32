#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aggopt/types.hpp"

namespace aggopt {

// Unordered node pair. Graph normalizes every edge so that u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected, unweighted communication graph over nodes 0..n-1.
///
/// Construction rejects self-loops, out-of-range endpoints and duplicate
/// edges (in either orientation) with std::invalid_argument.
class Graph {
 public:
  explicit Graph(std::size_t n_nodes, std::span<const Edge> edges = {});

  std::size_t size() const { return neighbors_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  std::size_t degree(std::size_t i) const { return neighbors_.at(i).size(); }

  friend bool operator==(const Graph& a, const Graph& b) { return a.edges_ == b.edges_ && a.size() == b.size(); }

 private:
  std::vector<Edge> edges_;  // sorted, u < v
  std::vector<std::vector<std::size_t>> neighbors_;
};

struct SpectralSummary {
  Matrix laplacian;
  bool is_connected = false;
  double lambda_bound = 0.0;  // zero when the graph is disconnected
};

Matrix laplacian(const Graph& g);

// Breadth-first traversal from node 0.
bool is_connected(const Graph& g);

// Smallest positive real part among the eigenvalues of the 2n x 2n block
// matrix [[I + L, L], [-L, 0]]. Eigenvalues with real part <= 1e-9 are
// treated as zero. Symmetric input is reduced per Laplacian eigenvalue mu to
// the roots of t^2 - (1 + mu) t + mu^2; anything else goes through a dense
// eigensolver. Throws std::invalid_argument on an empty or non-square matrix
// and std::domain_error if no eigenvalue is positive.
double lambda_bound(const Matrix& laplacian);

SpectralSummary spectral_summary(const Graph& g);

Graph path_graph(std::size_t n);
Graph ring_graph(std::size_t n);

// Random spanning tree (each node attaches to a uniformly chosen earlier node
// of a random permutation) plus every remaining pair independently with
// probability 0.2. Deterministic for a fixed (n, seed).
Graph random_connected_graph(std::size_t n, std::uint64_t seed);

}  // namespace aggopt
