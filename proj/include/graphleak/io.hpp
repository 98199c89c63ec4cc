#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "graphleak/graph.hpp"

namespace graphleak {

enum class GraphFormat { jsonl, tu };

// For jsonl, `path` is the file. For tu, `path` is the dataset prefix, e.g.
// data/MUTAG reads data/MUTAG_A.txt, data/MUTAG_graph_indicator.txt, ...
struct GraphSetFile {
  std::filesystem::path path;
  GraphFormat format = GraphFormat::jsonl;
};

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline Graph graph_from_json(const nlohmann::json& j, std::size_t line) {
  try {
    const std::string id = j.at("id").get<std::string>();
    const auto n = j.at("n").get<long long>();
    if (n < 1) throw ValidationError("graph '" + id + "': n must be >= 1");
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a pair", line);
      const auto u = e[0].get<long long>();
      const auto v = e[1].get<long long>();
      if (u < 0 || v < 0 || u >= n || v >= n) {
        throw ValidationError("graph '" + id + "': edge endpoint out of range [0," +
                              std::to_string(n) + ") (line " + std::to_string(line) + ")");
      }
      edges.emplace_back(static_cast<Node>(u), static_cast<Node>(v));
    }
    Graph g = Graph::from_edges(id, static_cast<std::size_t>(n), edges);
    if (j.contains("features")) {
      const auto& rows = j.at("features");
      if (rows.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("graph '" + id + "': features must have n rows (line " +
                              std::to_string(line) + ")");
      }
      const std::size_t cols = rows.empty() ? 0 : rows[0].size();
      Eigen::MatrixXd f(n, static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ParseError("ragged feature matrix", line);
        for (std::size_t c = 0; c < cols; ++c) {
          f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
      }
      g = g.with_features(std::move(f));
    }
    if (j.contains("labels")) g = g.with_node_labels(j.at("labels").get<std::vector<int>>());
    if (j.contains("graph_label")) g = g.with_graph_label(j.at("graph_label").get<int>());
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed graph record: ") + e.what(), line);
  }
}

inline nlohmann::ordered_json graph_to_json(const Graph& g) {
  nlohmann::ordered_json j;
  j["id"] = g.id();
  j["n"] = g.n();
  auto edges = nlohmann::ordered_json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  if (g.features()) {
    auto rows = nlohmann::ordered_json::array();
    const auto& f = *g.features();
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < f.cols(); ++c) row.push_back(f(r, c));
      rows.push_back(std::move(row));
    }
    j["features"] = std::move(rows);
  }
  if (g.node_labels()) j["labels"] = *g.node_labels();
  if (g.graph_label()) j["graph_label"] = *g.graph_label();
  return j;
}

inline std::filesystem::path tu_file(const std::filesystem::path& prefix, const char* suffix) {
  return prefix.parent_path() / (prefix.filename().string() + suffix);
}

inline std::vector<long long> read_int_column(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<long long> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stoll(line, &pos));
    } catch (const std::exception&) {
      throw ParseError("expected an integer in '" + path.filename().string() + "'", lineno);
    }
  }
  return out;
}

inline GraphSet read_tu(const std::filesystem::path& prefix, Provenance provenance) {
  const auto indicator = read_int_column(tu_file(prefix, "_graph_indicator.txt"));
  const std::size_t total_nodes = indicator.size();
  std::vector<std::size_t> first_node;  // per graph, global index of its first node
  std::vector<std::size_t> sizes;
  for (std::size_t v = 0; v < total_nodes; ++v) {
    const long long gi = indicator[v];
    if (gi < 1) throw ParseError("graph indicator must be 1-based", v + 1);
    const auto g = static_cast<std::size_t>(gi - 1);
    if (g + 1 < sizes.size() || g > sizes.size()) {
      throw ParseError("graph indicator must be non-decreasing and contiguous", v + 1);
    }
    if (g == sizes.size()) {
      first_node.push_back(v);
      sizes.push_back(0);
    }
    ++sizes[g];
  }

  std::vector<std::vector<Edge>> edges(sizes.size());
  {
    auto in = open_for_read(tu_file(prefix, "_A.txt"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      long long a = 0, b = 0;
      char sep = 0;
      std::istringstream ss(line);
      if (!(ss >> a >> sep >> b) || sep != ',') throw ParseError("expected 'u, v'", lineno);
      if (a < 1 || b < 1 || a > static_cast<long long>(total_nodes) ||
          b > static_cast<long long>(total_nodes)) {
        throw ValidationError("TU edge endpoint out of range (line " + std::to_string(lineno) + ")");
      }
      const auto u = static_cast<std::size_t>(a - 1);
      const auto v = static_cast<std::size_t>(b - 1);
      const auto gu = static_cast<std::size_t>(indicator[u] - 1);
      if (gu != static_cast<std::size_t>(indicator[v] - 1)) {
        throw ValidationError("TU edge crosses graphs (line " + std::to_string(lineno) + ")");
      }
      if (u == v) continue;
      edges[gu].emplace_back(static_cast<Node>(u - first_node[gu]), static_cast<Node>(v - first_node[gu]));
    }
  }

  std::optional<std::vector<long long>> node_labels;
  if (std::filesystem::exists(tu_file(prefix, "_node_labels.txt"))) {
    node_labels = read_int_column(tu_file(prefix, "_node_labels.txt"));
    if (node_labels->size() != total_nodes) throw ValidationError("node label count mismatch");
  }
  std::optional<std::vector<long long>> graph_labels;
  if (std::filesystem::exists(tu_file(prefix, "_graph_labels.txt"))) {
    graph_labels = read_int_column(tu_file(prefix, "_graph_labels.txt"));
    if (graph_labels->size() != sizes.size()) throw ValidationError("graph label count mismatch");
  }

  std::vector<Graph> graphs;
  graphs.reserve(sizes.size());
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    Graph graph = Graph::from_edges("g" + std::to_string(g), sizes[g], edges[g]);
    if (node_labels) {
      std::vector<int> l(sizes[g]);
      for (std::size_t k = 0; k < sizes[g]; ++k) l[k] = static_cast<int>((*node_labels)[first_node[g] + k]);
      graph = graph.with_node_labels(std::move(l));
    }
    if (graph_labels) graph = graph.with_graph_label(static_cast<int>((*graph_labels)[g]));
    graphs.push_back(std::move(graph));
  }
  return GraphSet(std::move(graphs), provenance);
}

inline void write_tu(const GraphSet& gs, const std::filesystem::path& prefix) {
  auto a = open_for_write(tu_file(prefix, "_A.txt"));
  auto ind = open_for_write(tu_file(prefix, "_graph_indicator.txt"));
  const bool all_node_labels =
      !gs.empty() && std::all_of(gs.begin(), gs.end(), [](const Graph& g) { return g.node_labels().has_value(); });
  const bool all_graph_labels =
      !gs.empty() && std::all_of(gs.begin(), gs.end(), [](const Graph& g) { return g.graph_label().has_value(); });
  std::ofstream nl, gl;
  if (all_node_labels) nl = open_for_write(tu_file(prefix, "_node_labels.txt"));
  if (all_graph_labels) gl = open_for_write(tu_file(prefix, "_graph_labels.txt"));
  std::size_t offset = 1;
  for (std::size_t gi = 0; gi < gs.size(); ++gi) {
    const Graph& g = gs[gi];
    for (std::size_t u = 0; u < g.n(); ++u) {
      ind << (gi + 1) << '\n';
      if (all_node_labels) nl << (*g.node_labels())[u] << '\n';
      for (Node v : g.neighbors(u)) a << (offset + u) << ", " << (offset + v) << '\n';
    }
    if (all_graph_labels) gl << *g.graph_label() << '\n';
    offset += g.n();
  }
}

}  // namespace detail

inline GraphSet read_graphset(const GraphSetFile& file, Provenance provenance = Provenance::generated) {
  if (file.format == GraphFormat::tu) return detail::read_tu(file.path, provenance);
  auto in = detail::open_for_read(file.path);
  std::vector<Graph> graphs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid json: ") + e.what(), lineno);
    }
    graphs.push_back(detail::graph_from_json(j, lineno));
  }
  return GraphSet(std::move(graphs), provenance);
}

inline void write_graphset(const GraphSet& gs, const GraphSetFile& file) {
  if (file.format == GraphFormat::tu) {
    detail::write_tu(gs, file.path);
    return;
  }
  auto out = detail::open_for_write(file.path);
  for (const auto& g : gs) out << detail::graph_to_json(g).dump() << '\n';
  if (!out) throw IoError("write failed for '" + file.path.string() + "'");
}

inline GraphFormat parse_graph_format(const std::string& s) {
  if (s == "jsonl") return GraphFormat::jsonl;
  if (s == "tu") return GraphFormat::tu;
  throw InvalidArgument("unknown graph format '" + s + "'");
}

// ---------------------------------------------------------------------------
// Metric reports

using ReportValue = std::variant<double, std::vector<double>, std::string>;
using Report = std::map<std::string, ReportValue>;

enum class ReportFormat { json, csv };

// Six significant digits, trailing zeros kept: 0.78 -> "0.780000".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.6g", v);
  return buf;
}

namespace detail {

inline std::string json_number(double v) {
  return std::isfinite(v) ? format_number(v) : "null";
}

inline std::string csv_cell(const ReportValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  if (const auto* l = std::get_if<std::vector<double>>(&v)) {
    std::string s;
    for (std::size_t i = 0; i < l->size(); ++i) {
      if (i) s += ';';
      s += format_number((*l)[i]);
    }
    return s;
  }
  const auto& str = std::get<std::string>(v);
  if (str.find_first_of(",\"\n") == std::string::npos) return str;
  std::string quoted = "\"";
  for (char c : str) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace detail

inline std::string render_report(const Report& metrics, ReportFormat format) {
  for (const auto& [key, _] : metrics) {
    if (key.empty()) throw InvalidArgument("report keys must be non-empty");
  }
  std::string out;
  if (format == ReportFormat::csv) {
    bool first = true;
    for (const auto& [key, _] : metrics) {
      if (!first) out += ',';
      out += key;
      first = false;
    }
    out += '\n';
    if (metrics.empty()) return out;
    first = true;
    for (const auto& [_, value] : metrics) {
      if (!first) out += ',';
      out += detail::csv_cell(value);
      first = false;
    }
    out += '\n';
    return out;
  }
  out += '{';
  bool first = true;
  for (const auto& [key, value] : metrics) {
    if (!first) out += ',';
    first = false;
    out += nlohmann::json(key).dump();
    out += ':';
    if (const auto* d = std::get_if<double>(&value)) {
      out += detail::json_number(*d);
    } else if (const auto* l = std::get_if<std::vector<double>>(&value)) {
      out += '[';
      for (std::size_t i = 0; i < l->size(); ++i) {
        if (i) out += ',';
        out += detail::json_number((*l)[i]);
      }
      out += ']';
    } else {
      out += nlohmann::json(std::get<std::string>(value)).dump();
    }
  }
  out += "}\n";
  return out;
}

inline void write_report(const Report& metrics, const std::filesystem::path& path, ReportFormat format) {
  const std::string text = render_report(metrics, format);
  auto out = detail::open_for_write(path);
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Multi-row csv (curves, per-graph tables). Every row must share the header.
inline void write_table(const std::vector<std::string>& header, const std::vector<std::vector<ReportValue>>& rows,
                        const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw InvalidArgument("table row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_cell(row[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace graphleak
