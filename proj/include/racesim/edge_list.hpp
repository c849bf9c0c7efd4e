#pragma once

// Plain-text edge lists:
//
//   # generator=<tag> seed=<u64> Z=<int> m=<int>
//   u v
//   ...
//
// One edge per line with u < v, ascending lexicographic order. Other lines
// starting with '#' are comments. Blank lines are ignored on load.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "racesim/errors.hpp"
#include "racesim/graph.hpp"

namespace racesim {

inline void write_edge_list(std::ostream& out, const Graph& g) {
  const auto& p = g.provenance();
  out << "# generator=" << p.generator << " seed=" << p.seed << " Z=" << g.node_count() << " m=" << p.param << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

namespace detail {

template <class T>
bool parse_number(std::string_view text, T& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Provenance parse_header(std::string_view body, std::size_t line_no) {
  Provenance p;
  bool has_gen = false, has_seed = false, has_z = false, has_m = false;
  for (auto token : split_ws(body)) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "header token without '=': " + std::string(token));
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    bool ok = true;
    if (key == "generator") {
      p.generator = std::string(value);
      ok = !value.empty();
      has_gen = true;
    } else if (key == "seed") {
      ok = parse_number(value, p.seed);
      has_seed = true;
    } else if (key == "Z") {
      ok = parse_number(value, p.nodes);
      has_z = true;
    } else if (key == "m") {
      ok = parse_number(value, p.param);
      has_m = true;
    } else {
      throw ParseError(line_no, "unknown header key '" + std::string(key) + "'");
    }
    if (!ok) throw ParseError(line_no, "bad value for header key '" + std::string(key) + "'");
  }
  if (!(has_gen && has_seed && has_z && has_m)) throw ParseError(line_no, "header needs generator, seed, Z and m");
  return p;
}

}  // namespace detail

inline Graph read_edge_list(std::istream& in) {
  std::optional<Provenance> header;
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    const auto tokens = detail::split_ws(view);
    if (tokens.empty()) continue;
    if (tokens.front().front() == '#') {
      if (view.find("generator=") == std::string_view::npos) continue;
      if (header) throw ParseError(line_no, "duplicate provenance header");
      auto body = view.substr(view.find('#') + 1);
      header = detail::parse_header(body, line_no);
      continue;
    }
    if (!header) throw ParseError(line_no, "edge before provenance header");
    if (tokens.size() != 2) throw ParseError(line_no, "expected two node ids");
    Edge e;
    if (!detail::parse_number(tokens[0], e.first) || !detail::parse_number(tokens[1], e.second))
      throw ParseError(line_no, "node ids must be non-negative integers");
    if (e.first == e.second) throw ParseError(line_no, "self-loop");
    if (e.first >= header->nodes || e.second >= header->nodes)
      throw ValidationError("Z", "line " + std::to_string(line_no) + ": node id exceeds Z=" +
                                     std::to_string(header->nodes));
    if (e.first > e.second) std::swap(e.first, e.second);
    edges.push_back(e);
  }
  if (!header) throw ParseError(line_no + 1, "missing provenance header");
  // Duplicate and isolated-node checks happen in Graph construction.
  return Graph::from_edges(header->nodes, edges, *header);
}

inline void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_edge_list(out, g);
  if (!out) throw IoError("write failed: " + path.string());
}

inline Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_edge_list(in);
}

}  // namespace racesim
