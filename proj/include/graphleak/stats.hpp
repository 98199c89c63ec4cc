#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "graphleak/graph.hpp"

namespace graphleak {

enum class Property { density, avg_degree, triangles_per_node, arboricity };

inline constexpr Property kAllProperties[] = {Property::density, Property::avg_degree,
                                              Property::triangles_per_node, Property::arboricity};

inline const char* to_string(Property p) {
  switch (p) {
    case Property::density: return "density";
    case Property::avg_degree: return "avg_degree";
    case Property::triangles_per_node: return "triangles_per_node";
    case Property::arboricity: return "arboricity";
  }
  return "unknown";
}

inline Property parse_property(const std::string& s) {
  for (Property p : kAllProperties) {
    if (s == to_string(p)) return p;
  }
  throw InvalidArgument("unknown property '" + s + "'");
}

// |E| / C(n,2). Undefined below two nodes: reported as 0 with `defined` false.
struct DensityValue {
  double value = 0.0;
  bool defined = true;
};

inline DensityValue density_checked(const Graph& g) {
  if (g.n() < 2) return {0.0, false};
  const double pairs = 0.5 * static_cast<double>(g.n()) * static_cast<double>(g.n() - 1);
  return {static_cast<double>(g.edge_count()) / pairs, true};
}

inline double density(const Graph& g) { return density_checked(g).value; }

inline double avg_degree(const Graph& g) {
  return 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.n());
}

// Triangles through each node, i.e. diag(A^3)/2.
inline std::vector<std::size_t> node_triangles(const Graph& g) {
  std::vector<std::size_t> t(g.n(), 0);
  for (std::size_t u = 0; u < g.n(); ++u) {
    const auto nb = g.neighbors(u);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        if (g.has_edge(nb[a], nb[b])) ++t[u];
      }
    }
  }
  return t;
}

inline double triangles_per_node(const Graph& g) {
  const auto t = node_triangles(g);
  return static_cast<double>(std::accumulate(t.begin(), t.end(), std::size_t{0})) /
         static_cast<double>(g.n());
}

namespace detail {

// Dinic max-flow on integer capacities.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : head_(nodes, -1), level_(nodes), it_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, std::int64_t cap) {
    arcs_.push_back({to, head_[from], cap});
    head_[from] = static_cast<int>(arcs_.size() - 1);
    arcs_.push_back({from, head_[to], 0});
    head_[to] = static_cast<int>(arcs_.size() - 1);
  }

  std::int64_t run(std::size_t s, std::size_t t) {
    std::int64_t flow = 0;
    while (bfs(s, t)) {
      for (std::size_t i = 0; i < head_.size(); ++i) it_[i] = head_[i];
      while (std::int64_t f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) flow += f;
    }
    return flow;
  }

 private:
  struct Arc {
    std::size_t to;
    int next;
    std::int64_t cap;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (int a = head_[u]; a != -1; a = arcs_[static_cast<std::size_t>(a)].next) {
        const auto& arc = arcs_[static_cast<std::size_t>(a)];
        if (arc.cap > 0 && level_[arc.to] < 0) {
          level_[arc.to] = level_[u] + 1;
          q.push(arc.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  std::int64_t dfs(std::size_t u, std::size_t t, std::int64_t pushed) {
    if (u == t) return pushed;
    for (int& a = it_[u]; a != -1; a = arcs_[static_cast<std::size_t>(a)].next) {
      auto& arc = arcs_[static_cast<std::size_t>(a)];
      if (arc.cap <= 0 || level_[arc.to] != level_[u] + 1) continue;
      if (std::int64_t f = dfs(arc.to, t, std::min(pushed, arc.cap))) {
        arc.cap -= f;
        arcs_[static_cast<std::size_t>(a) ^ 1].cap += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<Arc> arcs_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
};

// True iff some vertex subset H satisfies |E(H)| > k (|V(H)| - 1).
// For a fixed vertex v forced into H, max_{H ∋ v} |E(H)| - k|V(H)| is a
// max-closure problem (edge nodes gain 1, vertex nodes cost k); with v's cost
// paid up front the subset beats -k exactly when the min cut is below |E|.
inline bool exceeds_forest_bound(const Graph& g, std::int64_t k) {
  const std::size_t n = g.n();
  const auto edges = g.edges();
  const std::size_t m = edges.size();
  const std::size_t source = n + m;
  const std::size_t sink = source + 1;
  const std::int64_t inf = static_cast<std::int64_t>(m) + 1;
  for (std::size_t forced = 0; forced < n; ++forced) {
    if (g.degree(forced) == 0) continue;
    MaxFlow flow(n + m + 2);
    for (std::size_t e = 0; e < m; ++e) {
      flow.add_edge(source, n + e, 1);
      flow.add_edge(n + e, edges[e].first, inf);
      flow.add_edge(n + e, edges[e].second, inf);
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (v != forced) flow.add_edge(v, sink, k);
    }
    if (flow.run(source, sink) < static_cast<std::int64_t>(m)) return true;
  }
  return false;
}

inline std::size_t forest_peeling_bound(const Graph& g) {
  std::vector<Edge> remaining = g.edges();
  std::size_t forests = 0;
  std::vector<std::size_t> parent(g.n());
  while (!remaining.empty()) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::vector<Edge> rest;
    for (auto e : remaining) {
      const auto a = find(e.first), b = find(e.second);
      if (a == b) {
        rest.push_back(e);
      } else {
        parent[a] = b;
      }
    }
    remaining.swap(rest);
    ++forests;
  }
  return forests;
}

}  // namespace detail

inline constexpr std::size_t kExactArboricityLimit = 64;

// Nash-Williams arboricity: exact (flow-based) up to 64 nodes, forest-peeling
// upper bound beyond.
inline std::size_t arboricity(const Graph& g) {
  const std::size_t m = g.edge_count();
  if (m == 0) return 0;
  if (g.n() > kExactArboricityLimit) return detail::forest_peeling_bound(g);
  std::size_t lo = (m + g.n() - 2) / (g.n() - 1);  // ceil(m / (n-1)), always feasible lower bound
  std::size_t hi = std::max(lo, g.max_degree());
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (detail::exceeds_forest_bound(g, static_cast<std::int64_t>(mid))) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

inline double property_value(const Graph& g, Property p) {
  switch (p) {
    case Property::density: return density(g);
    case Property::avg_degree: return avg_degree(g);
    case Property::triangles_per_node: return triangles_per_node(g);
    case Property::arboricity: return static_cast<double>(arboricity(g));
  }
  return 0.0;
}

inline bool property_defined(const Graph& g, Property p) {
  return p != Property::density || g.n() >= 2;
}

struct Buckets {
  std::vector<double> proportions;  // k entries, sum to 1
  std::vector<double> edges;        // k+1 strictly increasing
  bool degenerate = false;          // all values identical
};

inline Buckets bucket_edges(double lo, double hi, std::size_t k) {
  if (k < 2) throw InvalidArgument("bucketize: k must be >= 2");
  Buckets b;
  b.edges.resize(k + 1);
  if (!(hi > lo)) {
    b.degenerate = true;
    for (std::size_t i = 0; i <= k; ++i) b.edges[i] = lo + static_cast<double>(i);
    return b;
  }
  const double width = (hi - lo) / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) b.edges[i] = lo + width * static_cast<double>(i);
  b.edges[k] = hi;
  return b;
}

// Proportions of `values` in the buckets delimited by `edges` (left-closed,
// rightmost bucket closed). Out-of-range values clamp to the end buckets.
inline std::vector<double> bucket_proportions(std::span<const double> values, std::span<const double> edges) {
  const std::size_t k = edges.size() - 1;
  std::vector<double> counts(k, 0.0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t idx = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    counts[std::min(idx, k - 1)] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(values.size());
  return counts;
}

inline Buckets bucketize(std::span<const double> values, std::size_t k) {
  if (values.empty()) throw InvalidArgument("bucketize: values must be non-empty");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  Buckets b = bucket_edges(*mn, *mx, k);
  if (b.degenerate) {
    b.proportions.assign(k, 0.0);
    b.proportions[0] = 1.0;
  } else {
    b.proportions = bucket_proportions(values, b.edges);
  }
  return b;
}

struct PropertyReport {
  Property property = Property::density;
  double mean = 0.0;
  std::vector<double> distribution;
  std::vector<double> bucket_edges;
  bool degenerate = false;
  std::size_t skipped = 0;  // graphs on which the property is undefined
};

}  // namespace graphleak
