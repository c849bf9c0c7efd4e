#pragma once

// Command-line front end: JSON experiment configs, CSV writers and the
// race_sim subcommands. run_cli() is the whole program; tools/race_sim.cpp
// only forwards argv. Exit codes: 0 ok, 2 config/flag error, 3 I/O error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "racesim/core_game.hpp"
#include "racesim/edge_list.hpp"
#include "racesim/errors.hpp"
#include "racesim/experiments.hpp"
#include "racesim/topology.hpp"

namespace racesim::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kOutputFormatVersion = 1;

// ---- formatting ----

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline const char* format_bool(bool v) { return v ? "true" : "false"; }

inline constexpr const char* kSweepHeader =
    "network_type,network_seed,instance_index,replicate_index,Z,m_or_L,beta,c,b,B,W,s,p_fo,p_r,normalized,"
    "update_rule,zealot_fraction,zealot_order,interference,generations,window,au_freq_all,au_freq_nonzealot,"
    "au_low,au_med,au_high";

inline constexpr const char* kTimeSeriesHeader = "generation,au_all,au_low,au_med,au_high";

inline constexpr const char* kRegionsHeader =
    "regime,s,p_fo,b,c,p_r,early_lo,early_hi,welfare_boundary,risk_dominance_boundary,region";

inline constexpr const char* kSummaryHeader =
    "cell,network_type,c,b,B,W,s,p_fo,p_r,zealot_fraction,replicates,mean_au_all,stderr_au_all,"
    "mean_au_nonzealot,stderr_au_nonzealot";

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
  out << kSweepHeader << '\n';
  for (const auto& r : records) {
    const auto& p = r.params;
    const auto& res = r.result;
    out << r.network.generator << ',' << r.network.seed << ',' << r.instance << ',' << r.replicate << ',' << r.nodes
        << ',' << r.network.param << ',' << format_double(r.dynamics.beta) << ',' << format_double(p.c) << ','
        << format_double(p.b) << ',' << format_double(p.B) << ',' << format_double(p.W) << ','
        << format_double(p.s) << ',' << format_double(p.p_fo) << ',' << format_double(p.p_r) << ','
        << format_bool(r.dynamics.normalized) << ',' << to_string(r.dynamics.rule) << ','
        << format_double(r.zealots.fraction) << ',' << to_string(r.zealots.order) << ','
        << to_string(r.zealots.interference) << ',' << r.generations << ',' << r.window << ','
        << format_double(res.au_freq_all) << ',' << format_double(res.au_freq_non_zealot) << ','
        << format_optional(res.au_by_class[0]) << ',' << format_optional(res.au_by_class[1]) << ','
        << format_optional(res.au_by_class[2]) << '\n';
  }
}

inline void write_timeseries_csv(std::ostream& out, std::span<const TimeSeriesRow> rows) {
  out << kTimeSeriesHeader << '\n';
  for (const auto& row : rows)
    out << row.generation << ',' << format_double(row.au_all) << ',' << format_optional(row.au_by_class[0]) << ','
        << format_optional(row.au_by_class[1]) << ',' << format_optional(row.au_by_class[2]) << '\n';
}

inline void write_summary_csv(std::ostream& out, std::span<const CellSummary> rows) {
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    const auto& p = s.params;
    out << s.cell << ',' << s.network << ',' << format_double(p.c) << ',' << format_double(p.b) << ','
        << format_double(p.B) << ',' << format_double(p.W) << ',' << format_double(p.s) << ','
        << format_double(p.p_fo) << ',' << format_double(p.p_r) << ',' << format_double(s.zealot_fraction) << ','
        << s.count << ',' << format_double(s.mean_au_all) << ',' << format_double(s.stderr_au_all) << ','
        << format_double(s.mean_au_non_zealot) << ',' << format_double(s.stderr_au_non_zealot) << '\n';
  }
}

// ---- config ----

struct NetworkConfig {
  NetworkSpec spec;
  std::size_t instances = 1;
  std::optional<std::uint64_t> seed;  // defaults to protocol.master_seed
  std::vector<fs::path> files;        // explicit edge lists instead of a generator
  bool allow_homogeneous = false;     // skip the k_max >= 3z check for ba/dms
};

struct OutputConfig {
  fs::path dir = ".";
  bool timeseries = false;
  std::size_t stride = 1;
  bool allow_empty_classes = false;
};

struct ExperimentConfig {
  RaceParameters game;
  std::vector<Axis> axes;
  NetworkConfig network;
  DynamicsConfig dynamics;
  double safe_fraction = 0.5;
  RunProtocol protocol;
  std::vector<double> zealot_fractions{0.0};
  ZealotSpec zealots;
  OutputConfig output;

  ParameterGrid grid() const { return ParameterGrid(game, axes); }
  std::uint64_t network_master_seed() const { return network.seed.value_or(protocol.master_seed); }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(section, "must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw ValidationError(section.empty() ? key : section + "." + key, "unknown key");
  }
}

inline double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "must be a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(field, "must be a non-negative integer");
}

inline bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ValidationError(field, "must be true or false");
  return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ValidationError(field, "must be a string");
  return v.get<std::string>();
}

inline std::vector<double> get_number_list(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ValidationError(field, "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

// Game keys in a fixed order; this is also the axis order of the grid.
inline constexpr std::array<const char*, 7> kGameKeys{"c", "b", "B", "W", "s", "p_fo", "p_r"};

inline void parse_game(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "game", {"c", "b", "B", "W", "s", "p_fo", "p_r"});
  for (const char* key : kGameKeys) {
    if (!j.contains(key)) continue;
    const std::string field = std::string("game.") + key;
    const json& v = j.at(key);
    if (v.is_array()) {
      cfg.axes.push_back({key, get_number_list(v, field)});
    } else {
      parameter_ref(cfg.game, key) = get_number(v, field);
    }
  }
}

inline NetworkType resolve_network_type(const std::string& type, std::optional<std::uint64_t> neighborhood) {
  if (type == "lattice") {
    const auto hood = neighborhood.value_or(4);
    if (hood == 4) return NetworkType::Lattice4;
    if (hood == 8) return NetworkType::Lattice8;
    throw ValidationError("neighborhood", "must be 4 or 8");
  }
  const NetworkType t = parse_network_type(type);
  if (neighborhood && t != NetworkType::Lattice4 && t != NetworkType::Lattice8)
    throw ValidationError("neighborhood", "only applies to lattices");
  return t;
}

inline void parse_network(const json& j, ExperimentConfig& cfg, const fs::path& base_dir) {
  check_keys(j, "network",
             {"type", "nodes", "side", "neighborhood", "m", "instances", "seed", "files", "allow_homogeneous"});
  auto& net = cfg.network;
  if (j.contains("files")) {
    for (const char* key : {"type", "nodes", "side", "neighborhood", "m", "seed"})
      if (j.contains(key)) throw ValidationError(std::string("network.") + key, "cannot be combined with network.files");
    const json& files = j.at("files");
    if (!files.is_array() || files.empty()) throw ValidationError("network.files", "must be a non-empty array of paths");
    for (std::size_t i = 0; i < files.size(); ++i) {
      fs::path p = get_string(files[i], "network.files[" + std::to_string(i) + "]");
      net.files.push_back(p.is_relative() ? base_dir / p : p);
    }
    net.instances = net.files.size();
    if (j.contains("instances") && get_count(j.at("instances"), "network.instances") != net.instances)
      throw ValidationError("network.instances", "must equal the number of network.files");
  } else {
    if (!j.contains("type")) throw ValidationError("network.type", "is required unless network.files is given");
    std::optional<std::uint64_t> hood;
    if (j.contains("neighborhood")) hood = get_count(j.at("neighborhood"), "network.neighborhood");
    try {
      net.spec.type = resolve_network_type(get_string(j.at("type"), "network.type"), hood);
    } catch (const ValidationError& e) {
      throw ValidationError("network." + e.field(), e.message());
    }
    if (j.contains("nodes")) net.spec.nodes = get_count(j.at("nodes"), "network.nodes");
    if (j.contains("side")) net.spec.side = get_count(j.at("side"), "network.side");
    if (j.contains("m")) net.spec.m = get_count(j.at("m"), "network.m");
    if (j.contains("instances")) net.instances = get_count(j.at("instances"), "network.instances");
    if (j.contains("seed")) net.seed = get_count(j.at("seed"), "network.seed");
  }
  if (j.contains("allow_homogeneous")) net.allow_homogeneous = get_bool(j.at("allow_homogeneous"), "network.allow_homogeneous");
  if (net.instances < 1) throw ValidationError("network.instances", "must be >= 1");
}

inline void parse_dynamics(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "dynamics", {"normalized", "update_rule", "beta", "safe_fraction"});
  if (j.contains("normalized")) cfg.dynamics.normalized = get_bool(j.at("normalized"), "dynamics.normalized");
  if (j.contains("update_rule")) {
    try {
      cfg.dynamics.rule = parse_update_rule(get_string(j.at("update_rule"), "dynamics.update_rule"));
    } catch (const ValidationError& e) {
      throw ValidationError("dynamics.update_rule", e.message());
    }
  }
  if (j.contains("beta")) cfg.dynamics.beta = get_number(j.at("beta"), "dynamics.beta");
  if (j.contains("safe_fraction")) cfg.safe_fraction = get_number(j.at("safe_fraction"), "dynamics.safe_fraction");
}

inline void parse_protocol(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "protocol", {"generations", "window", "replicates", "master_seed"});
  auto& p = cfg.protocol;
  if (j.contains("generations")) p.generations = get_count(j.at("generations"), "protocol.generations");
  if (j.contains("window")) p.window = get_count(j.at("window"), "protocol.window");
  if (j.contains("replicates")) p.replicates = get_count(j.at("replicates"), "protocol.replicates");
  if (j.contains("master_seed")) p.master_seed = get_count(j.at("master_seed"), "protocol.master_seed");
}

inline void parse_zealots(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "zealots", {"fractions", "order", "strategy", "interference", "acceleration_speed"});
  auto& z = cfg.zealots;
  if (j.contains("fractions")) cfg.zealot_fractions = get_number_list(j.at("fractions"), "zealots.fractions");
  if (j.contains("order")) {
    const auto order = get_string(j.at("order"), "zealots.order");
    if (order == "descending") z.order = ZealotOrder::Descending;
    else if (order == "reverse") z.order = ZealotOrder::Reverse;
    else throw ValidationError("zealots.order", "expected descending or reverse, got '" + order + "'");
  }
  if (j.contains("strategy")) {
    try {
      z.strategy = parse_strategy(get_string(j.at("strategy"), "zealots.strategy"));
    } catch (const ValidationError& e) {
      throw ValidationError("zealots.strategy", e.message());
    }
  }
  if (j.contains("interference")) {
    const auto mode = get_string(j.at("interference"), "zealots.interference");
    if (mode == "none") z.interference = Interference::None;
    else if (mode == "accelerate") z.interference = Interference::Accelerate;
    else if (mode == "fund") z.interference = Interference::Fund;
    else throw ValidationError("zealots.interference", "expected none, accelerate or fund, got '" + mode + "'");
  }
  if (j.contains("acceleration_speed"))
    z.acceleration_speed = get_number(j.at("acceleration_speed"), "zealots.acceleration_speed");
}

inline void parse_output(const json& j, ExperimentConfig& cfg, const fs::path& base_dir) {
  check_keys(j, "output", {"dir", "timeseries", "stride", "allow_empty_classes"});
  if (j.contains("dir")) {
    fs::path p = get_string(j.at("dir"), "output.dir");
    cfg.output.dir = p.is_relative() ? base_dir / p : p;
  }
  if (j.contains("timeseries")) cfg.output.timeseries = get_bool(j.at("timeseries"), "output.timeseries");
  if (j.contains("stride")) cfg.output.stride = get_count(j.at("stride"), "output.stride");
  if (j.contains("allow_empty_classes"))
    cfg.output.allow_empty_classes = get_bool(j.at("allow_empty_classes"), "output.allow_empty_classes");
}

template <class Fn>
void prefixed(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    if (e.field().find('.') != std::string::npos) throw;
    throw ValidationError(prefix + "." + e.field(), e.message());
  }
}

}  // namespace detail

// Relative paths (network.files, output.dir) resolve against base_dir.
inline ExperimentConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  detail::check_keys(j, "", {"game", "network", "dynamics", "protocol", "zealots", "output"});
  ExperimentConfig cfg;
  cfg.output.dir = base_dir;
  if (j.contains("game")) detail::parse_game(j.at("game"), cfg);
  if (!j.contains("network")) throw ValidationError("network", "section is required");
  detail::parse_network(j.at("network"), cfg, base_dir);
  if (j.contains("dynamics")) detail::parse_dynamics(j.at("dynamics"), cfg);
  if (j.contains("protocol")) detail::parse_protocol(j.at("protocol"), cfg);
  if (j.contains("zealots")) detail::parse_zealots(j.at("zealots"), cfg);
  if (j.contains("output")) detail::parse_output(j.at("output"), cfg, base_dir);

  // Validate every section before any work starts.
  detail::prefixed("game", [&] { cfg.grid(); });
  detail::prefixed("dynamics", [&] { cfg.dynamics.validate(); });
  if (!(cfg.safe_fraction >= 0 && cfg.safe_fraction <= 1))
    throw ValidationError("dynamics.safe_fraction", "must lie in [0,1]");
  detail::prefixed("protocol", [&] { cfg.protocol.validate(); });
  cfg.protocol.instances = cfg.network.instances;
  if (!std::is_sorted(cfg.zealot_fractions.begin(), cfg.zealot_fractions.end()) ||
      std::adjacent_find(cfg.zealot_fractions.begin(), cfg.zealot_fractions.end()) != cfg.zealot_fractions.end())
    throw ValidationError("zealots.fractions", "must be strictly ascending");
  for (double f : cfg.zealot_fractions)
    if (!(f >= 0 && f <= 1)) throw ValidationError("zealots.fractions", "values must lie in [0,1]");
  if (!(cfg.zealots.acceleration_speed >= 1) || !std::isfinite(cfg.zealots.acceleration_speed))
    throw ValidationError("zealots.acceleration_speed", "must be >= 1");
  if (cfg.output.stride < 1) throw ValidationError("output.stride", "must be >= 1");
  return cfg;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// Generator networks are built from network_seed(seed, i); files are loaded
// as they are. Growth-model instances must pass require_heterogeneous.
inline std::vector<Graph> load_networks(const ExperimentConfig& cfg) {
  std::vector<Graph> out;
  if (!cfg.network.files.empty()) {
    for (const auto& f : cfg.network.files) out.push_back(load_edge_list(f));
  } else {
    detail::prefixed("network", [&] { out = build_networks(cfg.network.spec, cfg.network.instances, cfg.network_master_seed()); });
  }
  if (!cfg.network.allow_homogeneous) {
    for (const auto& g : out) {
      const auto& gen = g.provenance().generator;
      if (gen == "ba" || gen == "dms") detail::prefixed("network", [&] { require_heterogeneous(g, nominal_connectivity(g)); });
    }
  }
  return out;
}

inline json resolved_config_json(const ExperimentConfig& cfg, std::span<const Graph> networks) {
  json game = json::object();
  for (const char* key : detail::kGameKeys) {
    auto it = std::find_if(cfg.axes.begin(), cfg.axes.end(), [&](const Axis& a) { return a.name == key; });
    if (it != cfg.axes.end()) {
      auto values = it->values;
      std::sort(values.begin(), values.end());
      game[key] = values;
    } else {
      RaceParameters p = cfg.game;
      game[key] = parameter_ref(p, key);
    }
  }
  json net = json::object();
  if (!cfg.network.files.empty()) {
    json files = json::array();
    for (const auto& f : cfg.network.files) files.push_back(f.generic_string());
    net["files"] = files;
  } else {
    net["type"] = std::string(to_string(cfg.network.spec.type));
    if (cfg.network.spec.type == NetworkType::Lattice4 || cfg.network.spec.type == NetworkType::Lattice8)
      net["side"] = cfg.network.spec.side;
    else
      net["nodes"] = cfg.network.spec.nodes;
    if (is_growth_model(cfg.network.spec.type)) {
      net["m"] = cfg.network.spec.m;
      net["seed"] = cfg.network_master_seed();
    }
  }
  net["instances"] = cfg.network.instances;
  net["allow_homogeneous"] = cfg.network.allow_homogeneous;
  json instances = json::array();
  for (const auto& g : networks) {
    const auto& p = g.provenance();
    instances.push_back({{"generator", p.generator}, {"seed", p.seed}, {"Z", p.nodes}, {"m_or_L", p.param},
                         {"edges", g.edge_count()}});
  }
  net["resolved_instances"] = instances;

  json z = json::object();
  z["fractions"] = cfg.zealot_fractions;
  z["order"] = std::string(to_string(cfg.zealots.order));
  z["strategy"] = std::string(to_string(cfg.zealots.strategy));
  z["interference"] = std::string(to_string(cfg.zealots.interference));
  z["acceleration_speed"] = cfg.zealots.acceleration_speed;

  return {
      {"game", game},
      {"network", net},
      {"dynamics",
       {{"normalized", cfg.dynamics.normalized},
        {"update_rule", std::string(to_string(cfg.dynamics.rule))},
        {"beta", cfg.dynamics.beta},
        {"safe_fraction", cfg.safe_fraction}}},
      {"protocol",
       {{"generations", cfg.protocol.generations},
        {"window", cfg.protocol.window},
        {"replicates", cfg.protocol.replicates},
        {"master_seed", cfg.protocol.master_seed}}},
      {"zealots", z},
      {"output",
       {{"timeseries", cfg.output.timeseries},
        {"stride", cfg.output.stride},
        {"allow_empty_classes", cfg.output.allow_empty_classes}}},
  };
}

// ---- output files ----

// Collects files written into one directory and deletes them unless commit()
// is reached.
class OutputSet {
public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory " + dir_.string());
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : written_) fs::remove(f, ec);
  }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    const fs::path path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    fn(out);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
  }

  void commit() { committed_ = true; }
  const std::vector<fs::path>& files() const { return written_; }

private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

inline std::string timeseries_name(const SweepRecord& r) {
  return "timeseries_" + std::to_string(r.cell) + "_" + std::to_string(r.fraction_index) + "_" +
         std::to_string(r.instance) + "_" + std::to_string(r.replicate) + ".csv";
}

enum class Command { Run, Sweep, Zealots };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Sweep: return "sweep";
    case Command::Zealots: return "zealots";
  }
  return "?";
}

struct ExecOptions {
  std::size_t threads = 1;
  bool quiet = false;
  std::optional<fs::path> out_dir;
};

// Shared body of run / sweep / zealots. Everything that can fail on input is
// checked before the output directory is touched.
inline int execute(Command cmd, const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out,
                   std::ostream& err) {
  const ParameterGrid grid = cfg.grid();
  if (cmd != Command::Sweep && grid.cell_count() != 1)
    throw ValidationError("game", std::string(to_string(cmd)) + " takes scalar game parameters; use sweep for grids");
  if (cmd != Command::Zealots && cfg.zealot_fractions.size() != 1)
    throw ValidationError("zealots.fractions", std::string(to_string(cmd)) + " takes one fraction; use zealots");

  const std::vector<Graph> networks = load_networks(cfg);

  Experiment exp;
  exp.grid = grid;
  exp.zealot_fractions = cfg.zealot_fractions;
  exp.zealots = cfg.zealots;
  exp.dynamics = cfg.dynamics;
  exp.protocol = cfg.protocol;
  exp.options.safe_fraction = cfg.safe_fraction;
  exp.options.record_series = cfg.output.timeseries;
  exp.options.series_stride = cfg.output.stride;

  if (cfg.output.timeseries && !cfg.output.allow_empty_classes) {
    for (const auto& g : networks) {
      std::array<std::size_t, kDegreeClassCount> sizes{};
      for (auto c : degree_classes(g, nominal_connectivity(g))) ++sizes[static_cast<std::size_t>(c)];
      for (std::size_t c = 0; c < kDegreeClassCount; ++c)
        if (sizes[c] == 0)
          throw ValidationError("output.timeseries", "degree class '" +
                                                         std::string(to_string(static_cast<DegreeClass>(c))) +
                                                         "' is empty on " + g.provenance().generator +
                                                         "; set output.allow_empty_classes to write it anyway");
    }
  }

  std::size_t last_percent = 0;
  auto progress = [&](std::size_t done, std::size_t total) {
    if (opts.quiet) return;
    const std::size_t percent = done * 100 / total;
    if (done == total || percent >= last_percent + 5) {
      last_percent = percent;
      err << "progress " << done << "/" << total << "\n" << std::flush;
    }
  };
  const auto records = run_experiment(exp, networks, opts.threads, progress);

  OutputSet outputs(opts.out_dir.value_or(cfg.output.dir));
  outputs.write("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, records); });
  std::vector<std::string> series_files;
  if (cfg.output.timeseries) {
    for (const auto& r : records) {
      const std::string name = records.size() == 1 ? "timeseries.csv" : timeseries_name(r);
      outputs.write(name, [&](std::ostream& os) { write_timeseries_csv(os, r.result.series); });
      series_files.push_back(name);
    }
  }
  json manifest = {
      {"format_version", kOutputFormatVersion},
      {"command", std::string(to_string(cmd))},
      {"config", resolved_config_json(cfg, networks)},
      {"outputs", {{"sweep", "sweep.csv"}, {"timeseries", series_files}}},
      {"records", records.size()},
  };
  outputs.write("manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  outputs.commit();

  write_summary_csv(out, aggregate(records));
  return kExitOk;
}

// ---- regions ----

struct RegionsRequest {
  Regime regime = Regime::Early;
  std::vector<double> s{1.5};
  std::vector<double> p_fo{0.5};
  std::vector<double> b{4.0};
  std::vector<double> c{1.0};
  std::vector<double> p_r;  // optional; region labels need it
};

// One row per (s, p_fo, b, c[, p_r]) combination, in that nesting order.
inline void write_regions_csv(std::ostream& out, const RegionsRequest& req) {
  out << kRegionsHeader << '\n';
  const std::vector<std::optional<double>> prs = req.p_r.empty()
                                                     ? std::vector<std::optional<double>>{std::nullopt}
                                                     : std::vector<std::optional<double>>(req.p_r.begin(), req.p_r.end());
  for (double s : req.s)
    for (double p_fo : req.p_fo)
      for (double b : req.b)
        for (double c : req.c)
          for (const auto& p_r : prs) {
            RaceParameters p;
            p.s = s;
            p.p_fo = p_fo;
            p.b = b;
            p.c = c;
            p.p_r = p_r.value_or(0.0);
            p.validate();
            std::string lo, hi, welfare, risk, region;
            if (req.regime == Regime::Early) {
              const auto bounds = early_region_boundaries(s);
              lo = format_double(bounds.lo);
              hi = format_double(bounds.hi);
            } else {
              if (p_fo < 1.0) welfare = format_double(late_welfare_boundary(p));
              risk = format_double(late_risk_dominance_boundary(p));
            }
            if (p_r && (req.regime == Regime::Early || p_fo < 1.0))
              region = std::string(to_string(classify_region(p, req.regime)));
            out << to_string(req.regime) << ',' << format_double(s) << ',' << format_double(p_fo) << ','
                << format_double(b) << ',' << format_double(c) << ',' << (p_r ? format_double(*p_r) : "") << ','
                << lo << ',' << hi << ',' << welfare << ',' << risk << ',' << region << '\n';
          }
}

// ---- entry point ----

namespace detail {

inline std::size_t resolve_threads(const std::optional<std::size_t>& flag) {
  if (flag) {
    if (*flag < 1) throw ValidationError("--threads", "must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("RACE_SIM_THREADS"); env && *env) {
    std::size_t value = 0;
    std::size_t used = 0;
    try {
      value = std::stoul(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || env[used] != '\0' || value < 1)
      throw ValidationError("RACE_SIM_THREADS", std::string("must be a positive integer, got '") + env + "'");
    return value;
  }
  return default_thread_count();
}

// Generator field names to the flags that set them.
inline std::string flag_for(const std::string& field) {
  if (field == "Z") return "--nodes";
  if (field == "L") return "--side";
  if (field == "m") return "--m";
  if (field == "network") return "--type";
  if (field == "regime") return "--regime";
  if (field == "s") return "--s";
  if (field == "p_fo") return "--pfo";
  if (field == "b") return "--b";
  if (field == "c") return "--c";
  if (field == "p_r") return "--pr";
  return field;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator for the AI development race game on structured populations", "race_sim"};
  app.require_subcommand(1);

  // generate-network
  auto* gen = app.add_subcommand("generate-network", "Write edge-list files for generated networks");
  std::string gen_type;
  std::size_t gen_nodes = 1000, gen_m = 2, gen_instances = 1, gen_side = 32, gen_hood = 4;
  std::uint64_t gen_seed = 1;
  std::string gen_out = ".";
  bool gen_allow_homogeneous = false;
  gen->add_option("--type", gen_type, "complete | lattice | lattice4 | lattice8 | ba | dms")->required();
  gen->add_option("--nodes", gen_nodes, "Number of nodes Z")->capture_default_str();
  gen->add_option("--m", gen_m, "Edges per new node")->capture_default_str();
  gen->add_option("--instances", gen_instances, "Number of instances")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed; instance i uses a derived seed")->capture_default_str();
  gen->add_option("--side", gen_side, "Lattice side L")->capture_default_str();
  auto* hood_opt = gen->add_option("--neighborhood", gen_hood, "Lattice neighbourhood, 4 or 8")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_flag("--allow-homogeneous", gen_allow_homogeneous, "Skip the k_max >= 3z check for ba/dms");

  // run / sweep / zealots
  std::string config_path;
  std::optional<std::size_t> threads;
  std::string out_override;
  bool quiet = false;
  auto add_experiment = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--threads", threads, "Worker threads (default: RACE_SIM_THREADS, else all cores)");
    sub->add_option("--out", out_override, "Override output.dir");
    sub->add_flag("--quiet", quiet, "No progress on stderr");
    return sub;
  };
  auto* run = add_experiment("run", "Run one parameter cell");
  auto* sweep_cmd = add_experiment("sweep", "Run a grid of game parameters");
  auto* zealots = add_experiment("zealots", "Run a zealot-fraction progression");

  // regions
  auto* regions = app.add_subcommand("regions", "Analytical region boundaries and labels");
  std::string regime_text;
  RegionsRequest req;
  std::string regions_out;
  regions->add_option("--regime", regime_text, "early | late")->required();
  regions->add_option("--s", req.s, "Speed-up values")->capture_default_str();
  regions->add_option("--pfo", req.p_fo, "p_fo values")->capture_default_str();
  regions->add_option("--b", req.b, "b values")->capture_default_str();
  regions->add_option("--c", req.c, "c values")->capture_default_str();
  regions->add_option("--pr", req.p_r, "p_r values for region labels");
  regions->add_option("--out", regions_out, "Write CSV here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      NetworkSpec spec;
      try {
        spec.type = detail::resolve_network_type(gen_type, hood_opt->count() ? std::optional<std::uint64_t>(gen_hood)
                                                                              : std::nullopt);
      } catch (const ValidationError& e) {
        throw ValidationError(e.field() == "neighborhood" ? "--neighborhood" : "--type", e.message());
      }
      spec.nodes = gen_nodes;
      spec.m = gen_m;
      spec.side = gen_side;
      if (gen_instances < 1) throw ValidationError("--instances", "must be >= 1");
      std::vector<Graph> graphs;
      try {
        graphs = build_networks(spec, is_growth_model(spec.type) ? gen_instances : 1, gen_seed);
        if (is_growth_model(spec.type) && !gen_allow_homogeneous)
          for (const auto& g : graphs) require_heterogeneous(g, nominal_connectivity(g));
      } catch (const ValidationError& e) {
        std::string msg = e.message();
        if (e.field() == "network") msg += " (pass --allow-homogeneous to keep it)";
        throw ValidationError(detail::flag_for(e.field()), msg);
      }
      std::error_code ec;
      fs::create_directories(gen_out, ec);
      if (ec || !fs::is_directory(gen_out)) throw IoError("cannot create output directory " + gen_out);
      std::vector<fs::path> written;
      try {
        for (const auto& g : graphs) {
          const fs::path path = fs::path(gen_out) / ("net_" + g.provenance().generator + "_" +
                                                     std::to_string(g.provenance().seed) + ".edges");
          written.push_back(path);
          save_edge_list(g, path);
        }
      } catch (...) {
        for (const auto& p : written) fs::remove(p, ec);
        throw;
      }
      for (const auto& p : written) out << p.generic_string() << '\n';
      return kExitOk;
    }

    if (regions->parsed()) {
      try {
        req.regime = parse_regime(regime_text);
        if (regions_out.empty()) {
          write_regions_csv(out, req);
        } else {
          std::ostringstream buf;
          write_regions_csv(buf, req);
          std::ofstream f(regions_out, std::ios::binary | std::ios::trunc);
          if (!(f << buf.str())) throw IoError("cannot write " + regions_out);
        }
      } catch (const ValidationError& e) {
        throw ValidationError(detail::flag_for(e.field()), e.message());
      }
      return kExitOk;
    }

    const Command cmd = run->parsed() ? Command::Run : sweep_cmd->parsed() ? Command::Sweep : Command::Zealots;
    (void)zealots;
    ExecOptions opts;
    opts.threads = detail::resolve_threads(threads);
    opts.quiet = quiet;
    if (!out_override.empty()) opts.out_dir = fs::path(out_override);
    const ExperimentConfig cfg = load_config(config_path);
    return execute(cmd, cfg, opts, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SingularBoundaryError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace racesim::cli
