#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "racesim/errors.hpp"
#include "racesim/graph.hpp"

namespace racesim {

enum class DegreeClass { Low = 0, Medium = 1, High = 2 };
inline constexpr std::size_t kDegreeClassCount = 3;

inline std::string_view to_string(DegreeClass c) {
  switch (c) {
    case DegreeClass::Low: return "low";
    case DegreeClass::Medium: return "medium";
    case DegreeClass::High: return "high";
  }
  return "?";
}

// Low: k < z. High: k >= k_max / 3. Medium otherwise. Low is tested first, so
// a node satisfying both Low and High conditions (only possible when
// z > k_max / 3) is Low.
constexpr DegreeClass classify_degree(std::size_t k, double z, std::size_t k_max) {
  const auto kd = static_cast<double>(k);
  if (kd < z) return DegreeClass::Low;
  if (kd >= static_cast<double>(k_max) / 3.0) return DegreeClass::High;
  return DegreeClass::Medium;
}

inline DegreeClass degree_class(const Graph& g, std::size_t node, double z) {
  if (node >= g.node_count()) throw ValidationError("node", "id out of range");
  if (!(z > 0)) throw ValidationError("z", "must be > 0");
  return classify_degree(g.degree(node), z, g.max_degree());
}

// z = 2m for the growth models, the empirical mean degree otherwise.
inline double nominal_connectivity(const Graph& g) {
  const auto& p = g.provenance();
  if (p.generator == "ba" || p.generator == "dms") return 2.0 * static_cast<double>(p.param);
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.node_count());
}

inline std::vector<DegreeClass> degree_classes(const Graph& g, double z) {
  std::vector<DegreeClass> out(g.node_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = classify_degree(g.degree(v), z, g.max_degree());
  return out;
}

// Descending degree, ties by ascending id.
inline std::vector<NodeId> rank_by_degree(const Graph& g) {
  std::vector<NodeId> order(g.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return g.degree(a) > g.degree(b); });
  return order;
}

// Growth-model instances are only useful for class-resolved measurements
// when the hub threshold clears the nominal connectivity.
inline void require_heterogeneous(const Graph& g, double z) {
  if (static_cast<double>(g.max_degree()) < 3.0 * z) {
    throw ValidationError("network", g.provenance().generator + " instance (seed " +
                                         std::to_string(g.provenance().seed) + ") has k_max=" +
                                         std::to_string(g.max_degree()) + " < 3z=" + std::to_string(3.0 * z));
  }
}

struct GraphMetrics {
  double mean_degree = 0;
  std::size_t max_degree = 0;
  double mean_local_clustering = 0;
  std::vector<std::size_t> degree_histogram;  // index = degree
};

// Pairs of neighbours (u, w), u < w, that are themselves adjacent.
inline std::size_t triangles_through(const Graph& g, std::size_t v) {
  std::size_t count = 0;
  auto nv = g.neighbors(v);
  for (auto it = nv.begin(); it != nv.end(); ++it) {
    auto nu = g.neighbors(*it);
    auto a = std::next(it);
    auto b = std::upper_bound(nu.begin(), nu.end(), *it);
    while (a != nv.end() && b != nu.end()) {
      if (*a < *b) ++a;
      else if (*b < *a) ++b;
      else { ++count; ++a; ++b; }
    }
  }
  return count;
}

inline double local_clustering(const Graph& g, std::size_t v) {
  const std::size_t k = g.degree(v);
  if (k < 2) return 0.0;
  return static_cast<double>(triangles_through(g, v)) / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

inline GraphMetrics graph_metrics(const Graph& g) {
  GraphMetrics out;
  const std::size_t n = g.node_count();
  if (n == 0) return out;
  out.mean_degree = 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(n);
  out.max_degree = g.max_degree();
  out.degree_histogram.assign(out.max_degree + 1, 0);
  double clustering = 0;
  for (std::size_t v = 0; v < n; ++v) {
    ++out.degree_histogram[g.degree(v)];
    clustering += local_clustering(g, v);
  }
  out.mean_local_clustering = clustering / static_cast<double>(n);
  return out;
}

}  // namespace racesim
