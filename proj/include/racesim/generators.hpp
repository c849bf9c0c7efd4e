#pragma once

// Interaction structures: complete graph (well-mixed), periodic square
// lattices, and the two growing scale-free models (Barabasi-Albert degree
// preferential attachment; Dorogovtsev-Mendes-Samukhin edge lottery).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "racesim/errors.hpp"
#include "racesim/graph.hpp"
#include "racesim/random.hpp"

namespace racesim {

enum class Neighborhood { Edge4 = 4, Moore8 = 8 };

inline Graph complete(std::size_t nodes) {
  if (nodes < 2) throw ValidationError("Z", "complete graph needs Z >= 2");
  std::vector<std::vector<NodeId>> adjacency(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    adjacency[v].reserve(nodes - 1);
    for (std::size_t w = 0; w < nodes; ++w)
      if (w != v) adjacency[v].push_back(static_cast<NodeId>(w));
  }
  return Graph::from_adjacency(std::move(adjacency), {"complete", 0, nodes, 0});
}

// L x L torus; node id = row * L + col.
inline Graph lattice(std::size_t side, Neighborhood hood) {
  if (side < 3) throw ValidationError("L", "periodic lattice needs L >= 3");
  const auto L = static_cast<long>(side);
  std::vector<std::vector<NodeId>> adjacency(side * side);
  for (long r = 0; r < L; ++r) {
    for (long c = 0; c < L; ++c) {
      auto& list = adjacency[r * L + c];
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (hood == Neighborhood::Edge4 && dr != 0 && dc != 0) continue;
          const long rr = (r + dr + L) % L;
          const long cc = (c + dc + L) % L;
          list.push_back(static_cast<NodeId>(rr * L + cc));
        }
      }
    }
  }
  const std::string tag = hood == Neighborhood::Edge4 ? "lattice4" : "lattice8";
  return Graph::from_adjacency(std::move(adjacency), {tag, 0, side * side, side});
}

namespace detail {

inline void add_edge(std::vector<std::vector<NodeId>>& adjacency, NodeId u, NodeId v) {
  adjacency[u].push_back(v);
  adjacency[v].push_back(u);
}

inline bool contains(const std::vector<NodeId>& v, NodeId x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace detail

// Seeded with K_{m+1}; every later node attaches to m distinct existing nodes
// drawn proportionally to degree (duplicate draws are rejected and redrawn).
inline Graph barabasi_albert(std::size_t nodes, std::size_t m, Rng& rng, std::uint64_t seed_tag = 0) {
  if (m < 1) throw ValidationError("m", "must be >= 1");
  if (nodes <= m + 1) throw ValidationError("Z", "barabasi-albert needs Z > m + 1");

  std::vector<std::vector<NodeId>> adjacency(nodes);
  // Each edge contributes both endpoints, so a uniform draw is degree-proportional.
  std::vector<NodeId> endpoints;
  endpoints.reserve(2 * (m * (m + 1) / 2 + m * (nodes - m - 1)));
  for (NodeId u = 0; u <= m; ++u) {
    for (NodeId v = u + 1; v <= m; ++v) {
      detail::add_edge(adjacency, u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }

  std::vector<NodeId> targets;
  targets.reserve(m);
  for (auto v = static_cast<NodeId>(m + 1); v < nodes; ++v) {
    targets.clear();
    while (targets.size() < m) {
      const NodeId t = endpoints[rng.below(endpoints.size())];
      if (!detail::contains(targets, t)) targets.push_back(t);
    }
    for (NodeId t : targets) {
      detail::add_edge(adjacency, v, t);
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return Graph::from_adjacency(std::move(adjacency), {"ba", seed_tag, nodes, m});
}

// Edge lottery: each new node picks m/2 uniformly random existing edges with
// pairwise disjoint endpoints and links to both ends of each. Seeded with
// K_{m+1} (the triangle for m = 2) so disjoint edges exist from the start.
inline Graph dms(std::size_t nodes, std::size_t m, Rng& rng, std::uint64_t seed_tag = 0) {
  if (m < 2 || m % 2 != 0) throw ValidationError("m", "dms needs an even m >= 2");
  if (nodes <= m + 1) throw ValidationError("Z", "dms needs Z > m + 1");

  std::vector<std::vector<NodeId>> adjacency(nodes);
  std::vector<Edge> edges;
  edges.reserve(m * (m + 1) / 2 + m * (nodes - m - 1));
  for (NodeId u = 0; u <= m; ++u) {
    for (NodeId v = u + 1; v <= m; ++v) {
      detail::add_edge(adjacency, u, v);
      edges.emplace_back(u, v);
    }
  }

  std::vector<NodeId> targets;
  targets.reserve(m);
  for (auto v = static_cast<NodeId>(m + 1); v < nodes; ++v) {
    targets.clear();
    while (targets.size() < m) {
      const Edge e = edges[rng.below(edges.size())];
      if (detail::contains(targets, e.first) || detail::contains(targets, e.second)) continue;
      targets.push_back(e.first);
      targets.push_back(e.second);
    }
    for (NodeId t : targets) {
      detail::add_edge(adjacency, v, t);
      edges.emplace_back(std::min(v, t), std::max(v, t));
    }
  }
  return Graph::from_adjacency(std::move(adjacency), {"dms", seed_tag, nodes, m});
}

// Expected |E| for both growth models with a K_{m+1} seed.
constexpr std::size_t growth_edge_count(std::size_t nodes, std::size_t m) {
  return m * (m + 1) / 2 + m * (nodes - m - 1);
}

}  // namespace racesim
