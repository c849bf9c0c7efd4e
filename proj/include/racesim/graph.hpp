#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "racesim/errors.hpp"

namespace racesim {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Generator tag, seed and size parameter. `param` is m for ba/dms, the side
// length L for lattices, and 0 for complete graphs.
struct Provenance {
  std::string generator;
  std::uint64_t seed = 0;
  std::size_t nodes = 0;
  std::size_t param = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// Undirected simple graph in compressed adjacency form. Neighbour lists are
// sorted ascending. Immutable once built.
class Graph {
public:
  Graph() = default;

  // Builds from per-node neighbour lists; lists are sorted here. Throws
  // ValidationError unless the result is symmetric, loop-free, duplicate-free
  // and has no isolated node.
  static Graph from_adjacency(std::vector<std::vector<NodeId>> adjacency, Provenance provenance) {
    Graph g;
    g.provenance_ = std::move(provenance);
    g.provenance_.nodes = adjacency.size();
    g.offsets_.reserve(adjacency.size() + 1);
    g.offsets_.push_back(0);
    for (auto& list : adjacency) {
      std::sort(list.begin(), list.end());
      g.neighbors_.insert(g.neighbors_.end(), list.begin(), list.end());
      g.offsets_.push_back(g.neighbors_.size());
    }
    g.max_degree_ = 0;
    for (std::size_t v = 0; v < adjacency.size(); ++v) g.max_degree_ = std::max(g.max_degree_, g.degree(v));
    g.check_invariants();
    return g;
  }

  static Graph from_edges(std::size_t nodes, std::span<const Edge> edges, Provenance provenance) {
    std::vector<std::vector<NodeId>> adjacency(nodes);
    for (auto [u, v] : edges) {
      if (u >= nodes || v >= nodes) throw ValidationError("edge", "node id out of range");
      adjacency[u].push_back(v);
      adjacency[v].push_back(u);
    }
    return from_adjacency(std::move(adjacency), std::move(provenance));
  }

  std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }
  std::size_t degree(std::size_t v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const noexcept { return max_degree_; }

  std::span<const NodeId> neighbors(std::size_t v) const noexcept {
    return {neighbors_.data() + offsets_[v], degree(v)};
  }

  bool has_edge(NodeId u, NodeId v) const {
    auto n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
  }

  const Provenance& provenance() const noexcept { return provenance_; }

  // Edges with u < v in ascending lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (std::size_t u = 0; u < node_count(); ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(static_cast<NodeId>(u), v);
    return out;
  }

  bool is_connected() const {
    const std::size_t n = node_count();
    if (n == 0) return true;
    std::vector<char> seen(n, 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : neighbors(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    return reached == n;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.provenance_ == b.provenance_ && a.offsets_ == b.offsets_ && a.neighbors_ == b.neighbors_;
  }

private:
  void check_invariants() const {
    for (std::size_t v = 0; v < node_count(); ++v) {
      auto n = neighbors(v);
      if (n.empty()) throw ValidationError("adjacency", "node " + std::to_string(v) + " is isolated");
      for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] >= node_count()) throw ValidationError("adjacency", "neighbour id out of range");
        if (n[i] == v) throw ValidationError("adjacency", "self-loop at node " + std::to_string(v));
        if (i > 0 && n[i] == n[i - 1])
          throw ValidationError("adjacency", "duplicate edge " + std::to_string(v) + "-" + std::to_string(n[i]));
        if (!has_edge(n[i], static_cast<NodeId>(v)))
          throw ValidationError("adjacency", "asymmetric edge " + std::to_string(v) + "-" + std::to_string(n[i]));
      }
    }
  }

  Provenance provenance_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::size_t max_degree_ = 0;
};

}  // namespace racesim
