#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace regae {

using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected graph: vertex count plus a set of unordered vertex pairs.
/// No self-loops, no duplicate edges.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n);
  /// Throws std::invalid_argument on self-loops or out-of-range endpoints.
  /// Duplicate pairs (in either direction) are collapsed.
  Graph(std::size_t n, const std::vector<Edge>& edges);

  /// Returns false if the edge already existed.
  bool add_edge(std::size_t u, std::size_t v);

  std::size_t vertex_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t degree(std::size_t v) const { return adjacency_.at(v).size(); }
  bool has_edge(std::size_t u, std::size_t v) const;

  /// Sorted neighbour list of `v`.
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_.at(v); }

  /// Edges as (u, v) with u < v, lexicographically sorted.
  std::vector<Edge> edges() const;

  std::vector<std::size_t> degree_sequence() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Returns the graph with vertex `v` renamed to `mapping[v]`.
/// `mapping` must be a permutation of [0, n).
Graph relabel(const Graph& g, const std::vector<std::size_t>& mapping);

/// Relabels the vertices by a uniformly random permutation drawn from `seed`.
Graph permute_graph(const Graph& g, std::uint64_t seed);

/// A graph reindexed into canonical position order.
/// `order[p]` is the vertex of the source graph placed at position p.
struct CanonicalGraph {
  Graph graph;
  std::vector<std::size_t> order;

  std::size_t vertex_count() const { return graph.vertex_count(); }
};

/// Degree-sorted breadth-first ordering. Vertices are ranked by (degree desc,
/// index asc); BFS starts at the top-ranked vertex and enqueues neighbours in
/// rank order. When a component is exhausted the search restarts at the
/// top-ranked unvisited vertex.
CanonicalGraph canonical_order(const Graph& g);

/// Induced subgraph on canonical positions [start, start + size), shifted to
/// start at 0. The window keeps the parent's order (no re-canonicalisation).
CanonicalGraph extract_window_subgraph(const CanonicalGraph& g, std::size_t start, std::size_t size);

/// The p x q lattice with vertex (r, c) at index r * q + c.
Graph grid_graph(std::size_t p, std::size_t q);

}  // namespace regae
