#include "regae/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>

namespace regae {

Graph::Graph(std::size_t n) : adjacency_(n) {}

Graph::Graph(std::size_t n, const std::vector<Edge>& edges) : adjacency_(n) {
  for (const auto& [u, v] : edges) add_edge(u, v);
}

bool Graph::add_edge(std::size_t u, std::size_t v) {
  const std::size_t n = vertex_count();
  if (u >= n || v >= n) {
    throw std::invalid_argument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                ") out of range for " + std::to_string(n) + " vertices");
  }
  if (u == v) throw std::invalid_argument("self-loop at vertex " + std::to_string(u));
  auto& nu = adjacency_[u];
  auto it = std::lower_bound(nu.begin(), nu.end(), v);
  if (it != nu.end() && *it == v) return false;
  nu.insert(it, v);
  auto& nv = adjacency_[v];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
  ++edge_count_;
  return true;
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
  if (u >= vertex_count() || v >= vertex_count()) return false;
  return std::binary_search(adjacency_[u].begin(), adjacency_[u].end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (std::size_t v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::vector<std::size_t> Graph::degree_sequence() const {
  std::vector<std::size_t> out(vertex_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = adjacency_[v].size();
  return out;
}

Graph relabel(const Graph& g, const std::vector<std::size_t>& mapping) {
  const std::size_t n = g.vertex_count();
  if (mapping.size() != n) throw std::invalid_argument("relabel: mapping size mismatch");
  std::vector<bool> seen(n, false);
  for (std::size_t t : mapping) {
    if (t >= n || seen[t]) throw std::invalid_argument("relabel: mapping is not a permutation");
    seen[t] = true;
  }
  Graph out(n);
  for (const auto& [u, v] : g.edges()) out.add_edge(mapping[u], mapping[v]);
  return out;
}

Graph permute_graph(const Graph& g, std::uint64_t seed) {
  std::vector<std::size_t> mapping(g.vertex_count());
  std::iota(mapping.begin(), mapping.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(mapping.begin(), mapping.end(), rng);
  return relabel(g, mapping);
}

CanonicalGraph canonical_order(const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> rank_order(n);
  std::iota(rank_order.begin(), rank_order.end(), std::size_t{0});
  auto higher_priority = [&g](std::size_t a, std::size_t b) {
    if (g.degree(a) != g.degree(b)) return g.degree(a) > g.degree(b);
    return a < b;
  };
  std::sort(rank_order.begin(), rank_order.end(), higher_priority);

  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<bool> visited(n, false);
  std::queue<std::size_t> frontier;
  std::vector<std::size_t> next;
  for (std::size_t root : rank_order) {
    if (visited[root]) continue;
    visited[root] = true;
    frontier.push(root);
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      order.push_back(v);
      next.clear();
      for (std::size_t w : g.neighbors(v)) {
        if (!visited[w]) next.push_back(w);
      }
      std::sort(next.begin(), next.end(), higher_priority);
      for (std::size_t w : next) {
        visited[w] = true;
        frontier.push(w);
      }
    }
  }

  std::vector<std::size_t> position(n);
  for (std::size_t p = 0; p < n; ++p) position[order[p]] = p;
  return CanonicalGraph{relabel(g, position), std::move(order)};
}

CanonicalGraph extract_window_subgraph(const CanonicalGraph& g, std::size_t start, std::size_t size) {
  const std::size_t n = g.vertex_count();
  if (size < 1 || start > n || size > n - start) {
    throw std::out_of_range("window [" + std::to_string(start) + ", " + std::to_string(start + size) +
                            ") out of range for " + std::to_string(n) + " vertices");
  }
  Graph sub(size);
  for (std::size_t u = start; u < start + size; ++u) {
    for (std::size_t v : g.graph.neighbors(u)) {
      if (v > u && v < start + size) sub.add_edge(u - start, v - start);
    }
  }
  std::vector<std::size_t> order;
  if (!g.order.empty()) order.assign(g.order.begin() + start, g.order.begin() + start + size);
  return CanonicalGraph{std::move(sub), std::move(order)};
}

Graph grid_graph(std::size_t p, std::size_t q) {
  Graph g(p * q);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < q; ++c) {
      const std::size_t v = r * q + c;
      if (c + 1 < q) g.add_edge(v, v + 1);
      if (r + 1 < p) g.add_edge(v, v + q);
    }
  }
  return g;
}

}  // namespace regae
