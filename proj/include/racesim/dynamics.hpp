#pragma once

// Pairwise-comparison (Fermi) imitation dynamics on a graph.
//
// RNG draw order is fixed and part of the contract:
//   asynchronous step : focal = below(Z), model = neighbours[below(k_focal)],
//                       accept = uniform(); all three are drawn every step,
//                       including when the focal node is a zealot or already
//                       shares the model's strategy.
//   synchronous gen.  : for each non-zealot node in ascending id order,
//                       model = neighbours[below(k)], then accept = uniform().
// A change happens iff accept < fermi_probability(f_focal, f_model, beta).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "racesim/core_game.hpp"
#include "racesim/errors.hpp"
#include "racesim/graph.hpp"
#include "racesim/random.hpp"
#include "racesim/topology.hpp"

namespace racesim {

enum class Strategy : std::uint8_t { AS = 0, AU = 1 };

inline std::string_view to_string(Strategy s) { return s == Strategy::AS ? "AS" : "AU"; }

inline Strategy parse_strategy(std::string_view text) {
  if (text == "AS") return Strategy::AS;
  if (text == "AU") return Strategy::AU;
  throw ValidationError("strategy", "expected AS or AU, got '" + std::string(text) + "'");
}

enum class UpdateRule { Asynchronous, Synchronous };

inline std::string_view to_string(UpdateRule r) { return r == UpdateRule::Asynchronous ? "async" : "sync"; }

inline UpdateRule parse_update_rule(std::string_view text) {
  if (text == "async") return UpdateRule::Asynchronous;
  if (text == "sync") return UpdateRule::Synchronous;
  throw ValidationError("update_rule", "expected async or sync, got '" + std::string(text) + "'");
}

struct DynamicsConfig {
  bool normalized = false;  // divide accumulated payoff by degree
  UpdateRule rule = UpdateRule::Asynchronous;
  double beta = 1.0;

  void validate() const {
    if (!(beta >= 0) || !std::isfinite(beta)) throw ValidationError("beta", "must be finite and >= 0");
  }
};

struct PopulationState {
  std::vector<Strategy> strategies;
  std::vector<std::optional<Strategy>> zealot_of;
  std::vector<double> interference;  // additive fitness bonus

  std::size_t size() const noexcept { return strategies.size(); }
  bool is_zealot(std::size_t v) const { return zealot_of[v].has_value(); }

  std::size_t zealot_count() const {
    return static_cast<std::size_t>(
        std::count_if(zealot_of.begin(), zealot_of.end(), [](const auto& z) { return z.has_value(); }));
  }

  std::size_t au_count() const {
    return static_cast<std::size_t>(std::count(strategies.begin(), strategies.end(), Strategy::AU));
  }

  friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

inline PopulationState init_population(const Graph& g, Rng& rng, double safe_fraction = 0.5) {
  if (!(safe_fraction >= 0.0 && safe_fraction <= 1.0))
    throw ValidationError("safe_fraction", "must lie in [0,1]");
  const std::size_t n = g.node_count();
  PopulationState state;
  state.strategies.resize(n);
  state.zealot_of.assign(n, std::nullopt);
  state.interference.assign(n, 0.0);
  for (auto& s : state.strategies) s = rng.uniform() < safe_fraction ? Strategy::AS : Strategy::AU;
  return state;
}

// Fixes the listed nodes to `strategy` and records the bonus. Idempotent.
inline void set_zealots(PopulationState& state, std::span<const NodeId> nodes, Strategy strategy, double bonus) {
  for (NodeId v : nodes)
    if (v >= state.size()) throw ValidationError("zealots", "node id " + std::to_string(v) + " out of range");
  for (NodeId v : nodes) {
    state.strategies[v] = strategy;
    state.zealot_of[v] = strategy;
    state.interference[v] = bonus;
  }
}

// Fitness from neighbour strategy counts. Both the reference path and the
// cached Evolver go through this so their values agree bit for bit.
inline double payoff_from_counts(const PayoffMatrix2& m, Strategy own, std::size_t safe_neighbors,
                                 std::size_t unsafe_neighbors, bool normalized, double bonus) {
  const int row = static_cast<int>(own);
  double f = static_cast<double>(safe_neighbors) * m(row, 0) + static_cast<double>(unsafe_neighbors) * m(row, 1);
  if (normalized) f /= static_cast<double>(safe_neighbors + unsafe_neighbors);
  return f + bonus;
}

inline double fitness(const PopulationState& state, const Graph& g, const PayoffMatrix2& m, std::size_t node,
                      const DynamicsConfig& cfg) {
  std::size_t unsafe = 0;
  for (NodeId w : g.neighbors(node)) unsafe += state.strategies[w] == Strategy::AU;
  return payoff_from_counts(m, state.strategies[node], g.degree(node) - unsafe, unsafe, cfg.normalized,
                            state.interference[node]);
}

inline constexpr double kFermiExponentClamp = 700.0;

// Probability that a focal player with fitness `focal` imitates a model with
// fitness `model`. Saturates to exactly 0 or 1 at the exponent clamp.
inline double fermi_probability(double focal, double model, double beta) {
  const double x = beta * (focal - model);
  if (x >= kFermiExponentClamp) return 0.0;
  if (x <= -kFermiExponentClamp) return 1.0;
  return 1.0 / (1.0 + std::exp(x));
}

inline void async_step(PopulationState& state, const Graph& g, const PayoffMatrix2& m, const DynamicsConfig& cfg,
                       Rng& rng) {
  const auto focal = static_cast<std::size_t>(rng.below(g.node_count()));
  const auto nbrs = g.neighbors(focal);
  const NodeId model = nbrs[rng.below(nbrs.size())];
  const double accept = rng.uniform();
  if (state.is_zealot(focal) || state.strategies[focal] == state.strategies[model]) return;
  const double p = fermi_probability(fitness(state, g, m, focal, cfg), fitness(state, g, m, model, cfg), cfg.beta);
  if (accept < p) state.strategies[focal] = state.strategies[model];
}

inline void sync_generation(PopulationState& state, const Graph& g, const PayoffMatrix2& m, const DynamicsConfig& cfg,
                            Rng& rng) {
  const std::size_t n = g.node_count();
  std::vector<double> fit(n);
  for (std::size_t v = 0; v < n; ++v) fit[v] = fitness(state, g, m, v, cfg);
  std::vector<Strategy> next = state.strategies;
  for (std::size_t v = 0; v < n; ++v) {
    if (state.is_zealot(v)) continue;
    const auto nbrs = g.neighbors(v);
    const NodeId model = nbrs[rng.below(nbrs.size())];
    const double accept = rng.uniform();
    if (state.strategies[v] == state.strategies[model]) continue;
    if (accept < fermi_probability(fit[v], fit[model], cfg.beta)) next[v] = state.strategies[model];
  }
  state.strategies = std::move(next);
}

// Same dynamics as async_step / sync_generation, with per-node counts of
// unsafe neighbours and per-class unsafe totals maintained incrementally.
class Evolver {
public:
  Evolver(const Graph& g, const PayoffMatrix2& m, const DynamicsConfig& cfg, PopulationState state,
          std::vector<DegreeClass> classes = {})
      : graph_(&g), matrix_(m), cfg_(cfg), state_(std::move(state)), classes_(std::move(classes)) {
    cfg_.validate();
    if (state_.size() != g.node_count()) throw ValidationError("state", "size does not match graph");
    if (!classes_.empty() && classes_.size() != g.node_count())
      throw ValidationError("classes", "size does not match graph");
    unsafe_neighbors_.assign(g.node_count(), 0);
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      if (state_.strategies[v] != Strategy::AU) continue;
      ++unsafe_total_;
      if (!state_.is_zealot(v)) ++unsafe_free_;
      if (!classes_.empty()) ++unsafe_by_class_[static_cast<std::size_t>(classes_[v])];
      for (NodeId w : g.neighbors(v)) ++unsafe_neighbors_[w];
    }
    for (const auto c : classes_) ++class_size_[static_cast<std::size_t>(c)];
  }

  const PopulationState& state() const noexcept { return state_; }
  const Graph& graph() const noexcept { return *graph_; }

  double fitness(std::size_t v) const {
    const std::size_t unsafe = unsafe_neighbors_[v];
    return payoff_from_counts(matrix_, state_.strategies[v], graph_->degree(v) - unsafe, unsafe, cfg_.normalized,
                              state_.interference[v]);
  }

  void step(Rng& rng) {
    const auto focal = static_cast<std::size_t>(rng.below(graph_->node_count()));
    const auto nbrs = graph_->neighbors(focal);
    const NodeId model = nbrs[rng.below(nbrs.size())];
    const double accept = rng.uniform();
    if (state_.is_zealot(focal) || state_.strategies[focal] == state_.strategies[model]) return;
    if (accept < fermi_probability(fitness(focal), fitness(model), cfg_.beta)) set(focal, state_.strategies[model]);
  }

  void sync_generation(Rng& rng) {
    const std::size_t n = graph_->node_count();
    fitness_buffer_.resize(n);
    for (std::size_t v = 0; v < n; ++v) fitness_buffer_[v] = fitness(v);
    flips_.clear();
    for (std::size_t v = 0; v < n; ++v) {
      if (state_.is_zealot(v)) continue;
      const auto nbrs = graph_->neighbors(v);
      const NodeId model = nbrs[rng.below(nbrs.size())];
      const double accept = rng.uniform();
      if (state_.strategies[v] == state_.strategies[model]) continue;
      if (accept < fermi_probability(fitness_buffer_[v], fitness_buffer_[model], cfg_.beta))
        flips_.push_back(static_cast<NodeId>(v));
    }
    for (NodeId v : flips_) set(v, state_.strategies[v] == Strategy::AS ? Strategy::AU : Strategy::AS);
  }

  // One generation: Z asynchronous steps, or one synchronous sweep.
  void generation(Rng& rng) {
    if (cfg_.rule == UpdateRule::Synchronous) {
      sync_generation(rng);
      return;
    }
    const std::size_t n = graph_->node_count();
    for (std::size_t i = 0; i < n; ++i) step(rng);
  }

  // Homogeneous states are absorbing: no further change is possible.
  bool frozen() const noexcept { return unsafe_total_ == 0 || unsafe_total_ == graph_->node_count(); }

  std::size_t unsafe_total() const noexcept { return unsafe_total_; }
  std::size_t unsafe_non_zealot() const noexcept { return unsafe_free_; }
  std::size_t unsafe_in_class(DegreeClass c) const { return unsafe_by_class_[static_cast<std::size_t>(c)]; }
  std::size_t class_size(DegreeClass c) const { return class_size_[static_cast<std::size_t>(c)]; }

private:
  void set(std::size_t v, Strategy s) {
    if (state_.strategies[v] == s) return;
    state_.strategies[v] = s;
    const bool to_unsafe = s == Strategy::AU;
    if (to_unsafe) {
      ++unsafe_total_;
      ++unsafe_free_;
      if (!classes_.empty()) ++unsafe_by_class_[static_cast<std::size_t>(classes_[v])];
      for (NodeId w : graph_->neighbors(v)) ++unsafe_neighbors_[w];
    } else {
      --unsafe_total_;
      --unsafe_free_;
      if (!classes_.empty()) --unsafe_by_class_[static_cast<std::size_t>(classes_[v])];
      for (NodeId w : graph_->neighbors(v)) --unsafe_neighbors_[w];
    }
  }

  const Graph* graph_;
  PayoffMatrix2 matrix_;
  DynamicsConfig cfg_;
  PopulationState state_;
  std::vector<DegreeClass> classes_;
  std::vector<std::uint32_t> unsafe_neighbors_;
  std::size_t unsafe_total_ = 0;
  std::size_t unsafe_free_ = 0;  // excludes zealots
  std::array<std::size_t, kDegreeClassCount> unsafe_by_class_{};
  std::array<std::size_t, kDegreeClassCount> class_size_{};
  std::vector<double> fitness_buffer_;
  std::vector<NodeId> flips_;
};

}  // namespace racesim
