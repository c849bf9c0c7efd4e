#pragma once

// Replicate orchestration. A task is one (cell, zealot fraction, network
// instance, replicate) tuple; its RNG seed is
//   replicate_seed(master_seed, instance, replicate, cell)
// (see random.hpp). The zealot fraction does not enter the seed, so every
// fraction of a progression starts from the same initial configuration.
// Records are returned in (cell, fraction, instance, replicate) order no
// matter how many worker threads ran them.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "racesim/core_game.hpp"
#include "racesim/dynamics.hpp"
#include "racesim/errors.hpp"
#include "racesim/generators.hpp"
#include "racesim/graph.hpp"
#include "racesim/random.hpp"
#include "racesim/topology.hpp"

namespace racesim {

struct RunProtocol {
  std::size_t generations = 1000;
  std::size_t window = 1000;  // trailing generations averaged
  std::size_t replicates = 25;
  std::size_t instances = 10;
  std::uint64_t master_seed = 1;

  void validate() const {
    if (generations < 1) throw ValidationError("generations", "must be >= 1");
    if (window < 1) throw ValidationError("window", "must be >= 1");
    if (window > generations) throw ValidationError("window", "must not exceed generations");
    if (replicates < 1) throw ValidationError("replicates", "must be >= 1");
    if (instances < 1) throw ValidationError("instances", "must be >= 1");
  }
};

enum class ZealotOrder { Descending, Reverse };
enum class Interference { None, Accelerate, Fund };

inline constexpr double kFundingBonus = 1.0e7;
// Reverse order converts from the bottom of this top slice of the ranking.
inline constexpr double kReverseSliceFraction = 0.1;

inline std::string_view to_string(ZealotOrder o) { return o == ZealotOrder::Descending ? "descending" : "reverse"; }

inline std::string_view to_string(Interference i) {
  switch (i) {
    case Interference::None: return "none";
    case Interference::Accelerate: return "accelerate";
    case Interference::Fund: return "fund";
  }
  return "?";
}

struct ZealotSpec {
  double fraction = 0.0;
  ZealotOrder order = ZealotOrder::Descending;
  Strategy strategy = Strategy::AS;
  Interference interference = Interference::None;
  double acceleration_speed = 2.0;  // s used for the sB/W acceleration bonus
};

inline double interference_bonus(const ZealotSpec& z, const RaceParameters& p) {
  switch (z.interference) {
    case Interference::None: return 0.0;
    case Interference::Accelerate: return z.acceleration_speed * p.B / p.W;
    case Interference::Fund: return kFundingBonus;
  }
  return 0.0;
}

inline std::size_t rounded_count(double fraction, std::size_t nodes) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nodes)));
}

// Nodes converted for `fraction`. Descending: prefix of rank_by_degree.
// Reverse: the last n entries of the top-10% slice of the ranking, so growing
// fractions walk the slice upward towards the largest hub.
inline std::vector<NodeId> zealot_nodes(const Graph& g, double fraction, ZealotOrder order) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("zealot_fraction", "must lie in [0,1]");
  const std::size_t n = rounded_count(fraction, g.node_count());
  if (n == 0) return {};
  const auto rank = rank_by_degree(g);
  if (order == ZealotOrder::Descending) return {rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(n)};
  const std::size_t slice = rounded_count(kReverseSliceFraction, g.node_count());
  if (n > slice) throw ValidationError("zealot_fraction", "reverse order only covers the top 10% of nodes");
  return {rank.begin() + static_cast<std::ptrdiff_t>(slice - n), rank.begin() + static_cast<std::ptrdiff_t>(slice)};
}

using ClassFrequencies = std::array<std::optional<double>, kDegreeClassCount>;

struct TimeSeriesRow {
  std::size_t generation = 0;
  double au_all = 0;
  ClassFrequencies au_by_class;
};

struct ReplicateResult {
  double au_freq_all = 0;
  double au_freq_non_zealot = 0;  // NaN when every node is a zealot
  ClassFrequencies au_by_class;   // empty when the class has no nodes
  std::vector<TimeSeriesRow> series;
  std::uint64_t seed = 0;
  std::size_t zealots = 0;
  // Integer window sums behind the means.
  std::uint64_t unsafe_sum_all = 0;
  std::uint64_t unsafe_sum_non_zealot = 0;
};

struct RunOptions {
  double safe_fraction = 0.5;
  bool record_series = false;
  std::size_t series_stride = 1;
  double connectivity = 0;  // z for degree classes; 0 = nominal_connectivity(g)
};

inline ReplicateResult run_replicate(const Graph& g, const RaceParameters& params, const DynamicsConfig& cfg,
                                     const RunProtocol& protocol, const ZealotSpec& zealot_spec, Rng& rng,
                                     const RunOptions& options = {}) {
  protocol.validate();
  cfg.validate();
  if (options.series_stride < 1) throw ValidationError("stride", "must be >= 1");
  const PayoffMatrix2 matrix = race_payoff_matrix(params);
  const std::size_t n = g.node_count();
  const double z = options.connectivity > 0 ? options.connectivity : nominal_connectivity(g);

  PopulationState state = init_population(g, rng, options.safe_fraction);
  const auto targets = zealot_nodes(g, zealot_spec.fraction, zealot_spec.order);
  set_zealots(state, targets, zealot_spec.strategy, interference_bonus(zealot_spec, params));

  ReplicateResult out;
  out.zealots = state.zealot_count();
  Evolver evolver(g, matrix, cfg, std::move(state), degree_classes(g, z));

  auto class_frequencies = [&] {
    ClassFrequencies f;
    for (std::size_t c = 0; c < kDegreeClassCount; ++c) {
      const auto cls = static_cast<DegreeClass>(c);
      if (evolver.class_size(cls) > 0)
        f[c] = static_cast<double>(evolver.unsafe_in_class(cls)) / static_cast<double>(evolver.class_size(cls));
    }
    return f;
  };
  auto record_row = [&](std::size_t generation) {
    out.series.push_back({generation, static_cast<double>(evolver.unsafe_total()) / static_cast<double>(n),
                          class_frequencies()});
  };

  if (options.record_series) record_row(0);
  std::array<std::uint64_t, kDegreeClassCount> class_sums{};
  const std::size_t first_averaged = protocol.generations - protocol.window + 1;
  for (std::size_t gen = 1; gen <= protocol.generations; ++gen) {
    if (!evolver.frozen()) evolver.generation(rng);
    if (gen >= first_averaged) {
      out.unsafe_sum_all += evolver.unsafe_total();
      out.unsafe_sum_non_zealot += evolver.unsafe_non_zealot();
      for (std::size_t c = 0; c < kDegreeClassCount; ++c) class_sums[c] += evolver.unsafe_in_class(static_cast<DegreeClass>(c));
    }
    if (options.record_series && gen % options.series_stride == 0) record_row(gen);
  }

  const auto window = static_cast<double>(protocol.window);
  out.au_freq_all = static_cast<double>(out.unsafe_sum_all) / (window * static_cast<double>(n));
  const std::size_t free_nodes = n - out.zealots;
  out.au_freq_non_zealot = free_nodes == 0 ? std::numeric_limits<double>::quiet_NaN()
                                           : static_cast<double>(out.unsafe_sum_non_zealot) /
                                                 (window * static_cast<double>(free_nodes));
  for (std::size_t c = 0; c < kDegreeClassCount; ++c) {
    const auto size = evolver.class_size(static_cast<DegreeClass>(c));
    if (size > 0) out.au_by_class[c] = static_cast<double>(class_sums[c]) / (window * static_cast<double>(size));
  }
  return out;
}

// Cartesian grid over named game parameters. Axis values are sorted
// ascending; the first axis varies slowest in cell order.
struct Axis {
  std::string name;  // c, b, B, W, s, p_fo or p_r
  std::vector<double> values;
};

inline double& parameter_ref(RaceParameters& p, const std::string& name) {
  if (name == "c") return p.c;
  if (name == "b") return p.b;
  if (name == "B") return p.B;
  if (name == "W") return p.W;
  if (name == "s") return p.s;
  if (name == "p_fo") return p.p_fo;
  if (name == "p_r") return p.p_r;
  throw ValidationError(name, "not a sweepable game parameter");
}

class ParameterGrid {
public:
  ParameterGrid(RaceParameters base, std::vector<Axis> axes) : base_(base), axes_(std::move(axes)) {
    for (auto& axis : axes_) {
      parameter_ref(base_, axis.name);
      if (axis.values.empty()) throw ValidationError(axis.name, "axis has no values");
      std::sort(axis.values.begin(), axis.values.end());
      if (std::adjacent_find(axis.values.begin(), axis.values.end()) != axis.values.end())
        throw ValidationError(axis.name, "axis has duplicate values");
    }
    for (std::size_t i = 0; i < cell_count(); ++i) cell(i).validate();
  }

  explicit ParameterGrid(RaceParameters base) : ParameterGrid(base, {}) {}

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes_) n *= a.values.size();
    return n;
  }

  RaceParameters cell(std::size_t index) const {
    RaceParameters p = base_;
    for (auto it = axes_.rbegin(); it != axes_.rend(); ++it) {
      parameter_ref(p, it->name) = it->values[index % it->values.size()];
      index /= it->values.size();
    }
    return p;
  }

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const RaceParameters& base() const noexcept { return base_; }

private:
  RaceParameters base_;
  std::vector<Axis> axes_;
};

struct Experiment {
  ParameterGrid grid{RaceParameters{}};
  std::vector<double> zealot_fractions{0.0};
  ZealotSpec zealots;  // fraction field ignored; taken from zealot_fractions
  DynamicsConfig dynamics;
  RunProtocol protocol;
  RunOptions options;
};

struct SweepRecord {
  std::size_t cell = 0;
  std::size_t fraction_index = 0;
  std::size_t instance = 0;
  std::size_t replicate = 0;
  RaceParameters params;
  Provenance network;
  std::size_t nodes = 0;
  DynamicsConfig dynamics;
  ZealotSpec zealots;
  std::size_t generations = 0;
  std::size_t window = 0;
  ReplicateResult result;
};

// Runs fn(i) for i in [0, count) on `threads` workers. The first exception
// thrown by any task is rethrown after all workers stop.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

inline std::vector<SweepRecord> run_experiment(const Experiment& exp, std::span<const Graph> networks,
                                               std::size_t threads = 1,
                                               const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  exp.protocol.validate();
  exp.dynamics.validate();
  if (networks.size() != exp.protocol.instances)
    throw ValidationError("instances", "expected " + std::to_string(exp.protocol.instances) + " network instances, got " +
                                           std::to_string(networks.size()));
  if (exp.zealot_fractions.empty()) throw ValidationError("zealot_fractions", "must not be empty");
  if (!std::is_sorted(exp.zealot_fractions.begin(), exp.zealot_fractions.end()))
    throw ValidationError("zealot_fractions", "must be sorted ascending");
  for (double f : exp.zealot_fractions)
    for (const auto& g : networks) zealot_nodes(g, f, exp.zealots.order);

  const std::size_t cells = exp.grid.cell_count();
  const std::size_t fractions = exp.zealot_fractions.size();
  const std::size_t instances = exp.protocol.instances;
  const std::size_t replicates = exp.protocol.replicates;
  const std::size_t total = cells * fractions * instances * replicates;

  std::vector<SweepRecord> records(total);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(total, threads, [&](std::size_t task) {
    std::size_t rest = task;
    const std::size_t replicate = rest % replicates;
    rest /= replicates;
    const std::size_t instance = rest % instances;
    rest /= instances;
    const std::size_t fraction_index = rest % fractions;
    const std::size_t cell = rest / fractions;

    SweepRecord& rec = records[task];
    rec.cell = cell;
    rec.fraction_index = fraction_index;
    rec.instance = instance;
    rec.replicate = replicate;
    rec.params = exp.grid.cell(cell);
    rec.network = networks[instance].provenance();
    rec.nodes = networks[instance].node_count();
    rec.dynamics = exp.dynamics;
    rec.zealots = exp.zealots;
    rec.zealots.fraction = exp.zealot_fractions[fraction_index];
    rec.generations = exp.protocol.generations;
    rec.window = exp.protocol.window;

    const std::uint64_t seed = replicate_seed(exp.protocol.master_seed, instance, replicate, cell);
    Rng rng(seed);
    rec.result = run_replicate(networks[instance], rec.params, exp.dynamics, exp.protocol, rec.zealots, rng, exp.options);
    rec.result.seed = seed;
    if (progress) {
      const std::size_t finished = ++done;
      std::lock_guard lock(progress_mutex);
      progress(finished, total);
    }
  });
  return records;
}

inline std::vector<SweepRecord> sweep(const ParameterGrid& grid, const RunProtocol& protocol,
                                      std::span<const Graph> networks, const DynamicsConfig& cfg = {},
                                      std::size_t threads = 1) {
  Experiment exp;
  exp.grid = grid;
  exp.dynamics = cfg;
  exp.protocol = protocol;
  return run_experiment(exp, networks, threads);
}

// Instances for a growth model use network_seed(master, i); deterministic
// structures are built once and repeated.
enum class NetworkType { WellMixed, Lattice4, Lattice8, BarabasiAlbert, Dms };

inline std::string_view to_string(NetworkType t) {
  switch (t) {
    case NetworkType::WellMixed: return "complete";
    case NetworkType::Lattice4: return "lattice4";
    case NetworkType::Lattice8: return "lattice8";
    case NetworkType::BarabasiAlbert: return "ba";
    case NetworkType::Dms: return "dms";
  }
  return "?";
}

inline NetworkType parse_network_type(std::string_view text) {
  if (text == "complete" || text == "wm" || text == "well-mixed") return NetworkType::WellMixed;
  if (text == "lattice4") return NetworkType::Lattice4;
  if (text == "lattice8") return NetworkType::Lattice8;
  if (text == "ba") return NetworkType::BarabasiAlbert;
  if (text == "dms") return NetworkType::Dms;
  throw ValidationError("type", "unknown network type '" + std::string(text) + "'");
}

struct NetworkSpec {
  NetworkType type = NetworkType::WellMixed;
  std::size_t nodes = 100;  // Z for complete/ba/dms
  std::size_t side = 32;    // L for lattices
  std::size_t m = 2;
};

inline Graph build_network(const NetworkSpec& spec, std::uint64_t seed) {
  switch (spec.type) {
    case NetworkType::WellMixed: return complete(spec.nodes);
    case NetworkType::Lattice4: return lattice(spec.side, Neighborhood::Edge4);
    case NetworkType::Lattice8: return lattice(spec.side, Neighborhood::Moore8);
    case NetworkType::BarabasiAlbert: {
      Rng rng(seed);
      return barabasi_albert(spec.nodes, spec.m, rng, seed);
    }
    case NetworkType::Dms: {
      Rng rng(seed);
      return dms(spec.nodes, spec.m, rng, seed);
    }
  }
  throw ValidationError("type", "unknown network type");
}

inline bool is_growth_model(NetworkType t) { return t == NetworkType::BarabasiAlbert || t == NetworkType::Dms; }

inline std::vector<Graph> build_networks(const NetworkSpec& spec, std::size_t instances, std::uint64_t master_seed) {
  std::vector<Graph> out;
  out.reserve(instances);
  if (!is_growth_model(spec.type)) {
    Graph g = build_network(spec, 0);
    for (std::size_t i = 0; i < instances; ++i) out.push_back(g);
    return out;
  }
  for (std::size_t i = 0; i < instances; ++i) out.push_back(build_network(spec, network_seed(master_seed, i)));
  return out;
}

struct ProgressionPoint {
  double fraction = 0;
  std::size_t zealots = 0;
  double mean_au_all = 0;
  double mean_au_non_zealot = 0;
  ClassFrequencies mean_au_by_class;
  std::vector<ReplicateResult> replicates;
};

inline ClassFrequencies mean_class_frequencies(std::span<const ReplicateResult> results) {
  ClassFrequencies out;
  for (std::size_t c = 0; c < kDegreeClassCount; ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : results) {
      if (r.au_by_class[c]) {
        sum += *r.au_by_class[c];
        ++n;
      }
    }
    if (n > 0) out[c] = sum / static_cast<double>(n);
  }
  return out;
}

// Zealot sets are nested across fractions (prefixes of the ranking, or
// growing suffixes of the top slice for Reverse). Every fraction reuses the
// replicate seeds of cell 0 on instance 0.
inline std::vector<ProgressionPoint> zealot_progression(const Graph& g, const RaceParameters& params,
                                                        const DynamicsConfig& cfg, const RunProtocol& protocol,
                                                        std::vector<double> fractions, ZealotSpec spec,
                                                        std::size_t threads = 1, const RunOptions& options = {}) {
  if (!std::is_sorted(fractions.begin(), fractions.end()))
    throw ValidationError("zealot_fractions", "must be sorted ascending");
  Experiment exp;
  exp.grid = ParameterGrid(params);
  exp.zealot_fractions = std::move(fractions);
  exp.zealots = spec;
  exp.dynamics = cfg;
  exp.protocol = protocol;
  exp.protocol.instances = 1;
  exp.options = options;
  const auto records = run_experiment(exp, std::span<const Graph>(&g, 1), threads);

  std::vector<ProgressionPoint> curve(exp.zealot_fractions.size());
  for (std::size_t i = 0; i < curve.size(); ++i) curve[i].fraction = exp.zealot_fractions[i];
  for (const auto& rec : records) curve[rec.fraction_index].replicates.push_back(rec.result);
  for (auto& point : curve) {
    double all = 0, free = 0;
    for (const auto& r : point.replicates) {
      all += r.au_freq_all;
      free += r.au_freq_non_zealot;
    }
    const auto n = static_cast<double>(point.replicates.size());
    point.zealots = point.replicates.front().zealots;
    point.mean_au_all = all / n;
    point.mean_au_non_zealot = free / n;
    point.mean_au_by_class = mean_class_frequencies(point.replicates);
  }
  return curve;
}

// Per-generation class frequencies of one run. Requires all three degree
// classes to be populated unless allow_empty_classes is set.
inline std::vector<TimeSeriesRow> degree_class_timeseries(const Graph& g, const RaceParameters& params,
                                                          const DynamicsConfig& cfg, const RunProtocol& protocol,
                                                          Rng& rng, RunOptions options = {},
                                                          const ZealotSpec& zealots = {},
                                                          bool allow_empty_classes = false) {
  const double z = options.connectivity > 0 ? options.connectivity : nominal_connectivity(g);
  if (!allow_empty_classes) {
    std::array<std::size_t, kDegreeClassCount> sizes{};
    for (auto c : degree_classes(g, z)) ++sizes[static_cast<std::size_t>(c)];
    for (std::size_t c = 0; c < kDegreeClassCount; ++c)
      if (sizes[c] == 0)
        throw ValidationError("network", "degree class '" + std::string(to_string(static_cast<DegreeClass>(c))) +
                                             "' is empty on this graph");
  }
  options.record_series = true;
  return run_replicate(g, params, cfg, protocol, zealots, rng, options).series;
}

struct CellSummary {
  std::size_t cell = 0;
  std::size_t fraction_index = 0;
  RaceParameters params;
  std::string network;
  double zealot_fraction = 0;
  std::size_t count = 0;
  double mean_au_all = 0;
  double stderr_au_all = 0;
  double mean_au_non_zealot = 0;
  double stderr_au_non_zealot = 0;
};

namespace detail {

inline std::pair<double, double> mean_stderr(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace detail

// Mean and standard error (sample sd / sqrt(n)) per (cell, fraction) group.
// Records are ordered by (instance, replicate) within a group before
// reduction, so the result does not depend on input order.
inline std::vector<CellSummary> aggregate(std::vector<SweepRecord> records) {
  std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.cell, a.fraction_index, a.instance, a.replicate) <
           std::tie(b.cell, b.fraction_index, b.instance, b.replicate);
  });
  std::vector<CellSummary> out;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    std::vector<double> all, free;
    while (j < records.size() && records[j].cell == records[i].cell &&
           records[j].fraction_index == records[i].fraction_index) {
      all.push_back(records[j].result.au_freq_all);
      free.push_back(records[j].result.au_freq_non_zealot);
      ++j;
    }
    CellSummary s;
    s.cell = records[i].cell;
    s.fraction_index = records[i].fraction_index;
    s.params = records[i].params;
    s.network = records[i].network.generator;
    s.zealot_fraction = records[i].zealots.fraction;
    s.count = j - i;
    std::tie(s.mean_au_all, s.stderr_au_all) = detail::mean_stderr(all);
    std::tie(s.mean_au_non_zealot, s.stderr_au_non_zealot) = detail::mean_stderr(free);
    out.push_back(s);
    i = j;
  }
  return out;
}

}  // namespace racesim
