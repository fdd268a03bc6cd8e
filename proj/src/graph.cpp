#include "propstab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "propstab/error.hpp"

namespace propstab {

namespace {

void check_vertex(const WeightedDigraph& g, Vertex v) {
  if (v >= g.size()) {
    throw Error(ErrorCode::InvalidVertex,
                "vertex " + std::to_string(v + 1) + " outside 1.." + std::to_string(g.size()));
  }
}

std::vector<bool> reachable_avoiding(const WeightedDigraph& g, Vertex s, const std::vector<bool>& blocked) {
  std::vector<bool> seen(g.size(), false);
  if (blocked[s]) return seen;
  std::deque<Vertex> queue{s};
  seen[s] = true;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    for (const auto& nb : g.out_edges(u)) {
      if (!seen[nb.vertex] && !blocked[nb.vertex]) {
        seen[nb.vertex] = true;
        queue.push_back(nb.vertex);
      }
    }
  }
  return seen;
}

}  // namespace

WeightedDigraph::WeightedDigraph(std::size_t vertex_count, std::vector<Edge> edges)
    : edges_(std::move(edges)), in_(vertex_count), out_(vertex_count) {
  if (vertex_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "graph needs at least one vertex");
  }
  for (const auto& e : edges_) {
    check_vertex(*this, e.from);
    check_vertex(*this, e.to);
    if (e.from == e.to) {
      throw Error(ErrorCode::SelfLoop, "self-loop at vertex " + std::to_string(e.from + 1));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::NonPositiveWeight, "edge " + std::to_string(e.from + 1) + "->" +
                                                    std::to_string(e.to + 1) + " has weight " +
                                                    std::to_string(e.weight));
    }
    for (const auto& nb : in_[e.to]) {
      if (nb.vertex == e.from) {
        throw Error(ErrorCode::DuplicateEdge,
                    "edge " + std::to_string(e.from + 1) + "->" + std::to_string(e.to + 1) + " listed twice");
      }
    }
    in_[e.to].push_back({e.from, e.weight});
    out_[e.from].push_back({e.to, e.weight});
  }
}

const std::vector<Neighbor>& WeightedDigraph::in_edges(Vertex i) const {
  check_vertex(*this, i);
  return in_[i];
}

const std::vector<Neighbor>& WeightedDigraph::out_edges(Vertex j) const {
  check_vertex(*this, j);
  return out_[j];
}

double WeightedDigraph::weight(Vertex i, Vertex j) const {
  for (const auto& nb : in_edges(i)) {
    if (nb.vertex == j) return nb.weight;
  }
  return 0.0;
}

std::vector<Vertex> in_neighbors(const WeightedDigraph& g, Vertex i) {
  std::vector<Vertex> out;
  for (const auto& nb : g.in_edges(i)) out.push_back(nb.vertex);
  std::sort(out.begin(), out.end());
  return out;
}

double weighted_in_degree(const WeightedDigraph& g, Vertex i) {
  double total = 0.0;
  for (const auto& nb : g.in_edges(i)) total += nb.weight;
  return total;
}

double max_weighted_in_degree(const WeightedDigraph& g) {
  double best = 0.0;
  for (Vertex i = 0; i < g.size(); ++i) best = std::max(best, weighted_in_degree(g, i));
  return best;
}

bool LaplacianSpectrum::is_zero(Complex lambda) const {
  double radius = 0.0;
  for (const auto& l : eigenvalues) radius = std::max(radius, std::abs(l));
  if (radius == 0.0) return true;
  return std::abs(lambda) < kZeroEigenvalueTol * radius;
}

LaplacianSpectrum laplacian(const WeightedDigraph& g) {
  const auto N = static_cast<Eigen::Index>(g.size());
  LaplacianSpectrum spec;
  spec.L = Matrix::Zero(N, N);
  for (const auto& e : g.edges()) {
    spec.L(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(e.from)) -= e.weight;
    spec.L(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(e.to)) += e.weight;
  }

  Eigen::EigenSolver<Matrix> es(spec.L, true);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("Laplacian eigendecomposition failed");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  for (Eigen::Index k = 0; k < N; ++k) order[static_cast<std::size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(es.eigenvalues()(a)) < std::abs(es.eigenvalues()(b));
  });
  for (auto k : order) spec.eigenvalues.push_back(es.eigenvalues()(k));
  for (const auto& l : spec.eigenvalues) {
    if (spec.is_zero(l)) ++spec.zero_multiplicity;
  }

  CMatrix V = es.eigenvectors();
  for (Eigen::Index k = 0; k < N; ++k) {
    const double nrm = V.col(k).norm();
    if (nrm > 0.0) V.col(k) /= nrm;
  }
  Eigen::JacobiSVD<CMatrix> svd(V);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  spec.eigenvector_condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  spec.diagonalizable = spec.eigenvector_condition <= kDiagonalizableCondLimit;
  return spec;
}

CutsetPartition validate_cutset(const WeightedDigraph& g, Vertex s, const std::vector<Vertex>& cut) {
  check_vertex(g, s);
  std::vector<bool> in_cut(g.size(), false);
  for (Vertex c : cut) {
    check_vertex(g, c);
    in_cut[c] = true;
  }
  const std::vector<bool> near_mask = reachable_avoiding(g, s, in_cut);

  CutsetPartition part;
  part.source = s;
  for (Vertex v = 0; v < g.size(); ++v) {
    if (in_cut[v]) part.cut.push_back(v);
    else if (near_mask[v]) part.near.push_back(v);
    else part.far.push_back(v);
  }
  if (!in_cut[s] && !near_mask[s]) {
    throw Error(ErrorCode::NotSeparating, "source lands on the far side");
  }
  for (const auto& e : g.edges()) {
    if (near_mask[e.from] && !in_cut[e.to] && !near_mask[e.to]) {
      throw Error(ErrorCode::NotSeparating, "edge " + std::to_string(e.from + 1) + "->" +
                                                std::to_string(e.to + 1) + " crosses from near to far side");
    }
  }
  return part;
}

std::vector<CutsetPartition> enumerate_separating_cutsets(const WeightedDigraph& g, Vertex s, std::size_t cap) {
  check_vertex(g, s);
  const std::size_t N = g.size();
  if (N > cap) {
    throw Error(ErrorCode::TooLarge, "cutset enumeration limited to " + std::to_string(cap) + " vertices");
  }
  std::vector<CutsetPartition> out;
  const std::size_t full = (std::size_t{1} << N) - 1;
  for (std::size_t mask = 0; mask < full; ++mask) {
    std::vector<Vertex> cut;
    for (Vertex v = 0; v < N; ++v) {
      if (mask & (std::size_t{1} << v)) cut.push_back(v);
    }
    CutsetPartition part = validate_cutset(g, s, cut);
    if (!part.far.empty()) out.push_back(std::move(part));
  }
  return out;
}

std::vector<std::optional<std::size_t>> graph_distance(const WeightedDigraph& g, Vertex s) {
  check_vertex(g, s);
  std::vector<std::optional<std::size_t>> dist(g.size());
  std::deque<Vertex> queue{s};
  dist[s] = 0;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    for (const auto& nb : g.out_edges(u)) {
      if (!dist[nb.vertex]) {
        dist[nb.vertex] = *dist[u] + 1;
        queue.push_back(nb.vertex);
      }
    }
  }
  return dist;
}

bool monotone_path_exists(const WeightedDigraph& g, Vertex s, Vertex b, const std::vector<double>& energies,
                          double tol) {
  check_vertex(g, s);
  check_vertex(g, b);
  if (energies.size() != g.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one energy per vertex required");
  }
  if (!graph_distance(g, s)[b]) {
    throw Error(ErrorCode::Unreachable, "vertex " + std::to_string(b + 1) + " is not reachable from " +
                                            std::to_string(s + 1));
  }
  std::vector<bool> seen(g.size(), false);
  std::deque<Vertex> queue{s};
  seen[s] = true;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    if (u == b) return true;
    for (const auto& nb : g.out_edges(u)) {
      const Vertex v = nb.vertex;
      if (!seen[v] && energies[v] <= energies[u] * (1.0 + tol)) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return false;
}

bool is_strongly_connected(const WeightedDigraph& g, const std::vector<Vertex>& subset) {
  std::vector<bool> blocked(g.size(), true);
  std::vector<Vertex> members = subset;
  if (members.empty()) {
    for (Vertex v = 0; v < g.size(); ++v) members.push_back(v);
  }
  for (Vertex v : members) {
    check_vertex(g, v);
    blocked[v] = false;
  }
  const Vertex root = members.front();
  const auto forward = reachable_avoiding(g, root, blocked);

  // Reverse reachability inside the induced subgraph.
  std::vector<bool> backward(g.size(), false);
  std::deque<Vertex> queue{root};
  backward[root] = true;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    for (const auto& nb : g.in_edges(u)) {
      if (!backward[nb.vertex] && !blocked[nb.vertex]) {
        backward[nb.vertex] = true;
        queue.push_back(nb.vertex);
      }
    }
  }
  return std::all_of(members.begin(), members.end(), [&](Vertex v) { return forward[v] && backward[v]; });
}

}  // namespace propstab
