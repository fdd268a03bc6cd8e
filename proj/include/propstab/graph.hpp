#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "propstab/lti.hpp"

namespace propstab {

/// Zero-based vertex index. Files and CLI output use 1-based ids.
using Vertex = std::size_t;

/// Directed edge `from -> to` with weight g_{to,from} > 0: the output of
/// `from` enters the dynamics of `to`.
struct Edge {
  Vertex from;
  Vertex to;
  double weight;
};

struct Neighbor {
  Vertex vertex;
  double weight;
};

class WeightedDigraph {
 public:
  explicit WeightedDigraph(std::size_t vertex_count, std::vector<Edge> edges = {});

  std::size_t size() const noexcept { return in_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Vertices j with g_ij > 0, with their weights.
  const std::vector<Neighbor>& in_edges(Vertex i) const;
  const std::vector<Neighbor>& out_edges(Vertex j) const;

  /// g_ij, zero when there is no edge j -> i.
  double weight(Vertex i, Vertex j) const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> in_;
  std::vector<std::vector<Neighbor>> out_;
};

std::vector<Vertex> in_neighbors(const WeightedDigraph& g, Vertex i);
double weighted_in_degree(const WeightedDigraph& g, Vertex i);
double max_weighted_in_degree(const WeightedDigraph& g);

/// Laplacian L (l_ij = -g_ij, rows sum to zero) and its spectrum.
struct LaplacianSpectrum {
  Matrix L;
  /// Sorted by increasing magnitude.
  std::vector<Complex> eigenvalues;
  std::size_t zero_multiplicity = 0;
  bool diagonalizable = true;
  /// Condition number of the (column-normalized) eigenvector matrix.
  double eigenvector_condition = 1.0;

  bool is_zero(Complex lambda) const;
};

inline constexpr double kZeroEigenvalueTol = 1e-9;
inline constexpr double kDiagonalizableCondLimit = 1e8;

LaplacianSpectrum laplacian(const WeightedDigraph& g);

/**
 * Separating cutset for source s: V_C removed, V_1 holds the vertices
 * reachable from s while avoiding V_C (empty when s is itself in V_C) and
 * V_B is everything else. No edge runs from V_1 into V_B.
 */
struct CutsetPartition {
  Vertex source;
  std::vector<Vertex> cut;
  std::vector<Vertex> near;
  std::vector<Vertex> far;
};

CutsetPartition validate_cutset(const WeightedDigraph& g, Vertex s, const std::vector<Vertex>& cut);

inline constexpr std::size_t kCutsetEnumerationCap = 12;

/// Every cutset (as subset of V, excluding V itself) whose canonical far side
/// is nonempty. Throws TooLarge when N exceeds `cap`.
std::vector<CutsetPartition> enumerate_separating_cutsets(const WeightedDigraph& g, Vertex s,
                                                          std::size_t cap = kCutsetEnumerationCap);

/// BFS hop distance along directed edges; nullopt for unreachable vertices.
std::vector<std::optional<std::size_t>> graph_distance(const WeightedDigraph& g, Vertex s);

/// True iff some directed path s -> ... -> b has energy non-increasing along
/// consecutive vertices (each step may rise by at most a factor 1 + tol).
/// Throws Unreachable when b cannot be reached from s at all.
bool monotone_path_exists(const WeightedDigraph& g, Vertex s, Vertex b, const std::vector<double>& energies,
                          double tol);

/// Strong connectivity of the subgraph induced by `subset` (all vertices when empty).
bool is_strongly_connected(const WeightedDigraph& g, const std::vector<Vertex>& subset = {});

}  // namespace propstab
