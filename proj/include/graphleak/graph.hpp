#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphleak/common.hpp"

namespace graphleak {

using Node = std::uint32_t;
using Edge = std::pair<Node, Node>;

// Undirected simple graph with optional node features, node labels and a
// graph-level class label. Values are immutable once built; every
// transformation returns a new Graph.
class Graph {
 public:
  Graph() : Graph("", 1) {}

  Graph(std::string id, std::size_t n) : id_(std::move(id)), n_(n), adj_(n * n, 0), lists_(n) {
    if (n == 0) throw ValidationError("graph '" + id_ + "' must have at least one node");
  }

  // Builds from an edge list. Endpoints must be < n; self-loops are rejected;
  // duplicates (in either orientation) collapse to one edge.
  static Graph from_edges(std::string id, std::size_t n, std::span<const Edge> edges) {
    Graph g(std::move(id), n);
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) {
        throw ValidationError("graph '" + g.id_ + "': edge (" + std::to_string(u) + "," +
                              std::to_string(v) + ") has endpoint >= n=" + std::to_string(n));
      }
      if (u == v) {
        throw ValidationError("graph '" + g.id_ + "': self-loop on node " + std::to_string(u));
      }
      g.adj_[u * n + v] = 1;
      g.adj_[v * n + u] = 1;
    }
    g.rebuild_lists();
    return g;
  }

  static Graph from_edges(std::string id, std::size_t n, std::initializer_list<Edge> edges) {
    return from_edges(std::move(id), n, std::span<const Edge>(edges.begin(), edges.size()));
  }

  // Row-major n*n 0/1 matrix; must be symmetric with a zero diagonal.
  static Graph from_adjacency(std::string id, std::size_t n, std::vector<std::uint8_t> adjacency) {
    Graph g(std::move(id), n);
    if (adjacency.size() != n * n) throw ValidationError("adjacency size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency[i * n + i]) throw ValidationError("adjacency has a self-loop");
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((adjacency[i * n + j] != 0) != (adjacency[j * n + i] != 0)) {
          throw ValidationError("adjacency is not symmetric");
        }
      }
    }
    for (auto& a : adjacency) a = a ? 1 : 0;
    g.adj_ = std::move(adjacency);
    g.rebuild_lists();
    return g;
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t n() const noexcept { return n_; }

  bool has_edge(std::size_t u, std::size_t v) const noexcept { return adj_[u * n_ + v] != 0; }
  const std::vector<std::uint8_t>& adjacency() const noexcept { return adj_; }
  std::span<const Node> neighbors(std::size_t u) const noexcept { return lists_[u]; }
  std::size_t degree(std::size_t u) const noexcept { return lists_[u].size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::size_t max_degree() const noexcept {
    std::size_t d = 0;
    for (const auto& l : lists_) d = std::max(d, l.size());
    return d;
  }

  // Edges with u < v in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (Node u = 0; u < n_; ++u) {
      for (Node v : lists_[u]) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  Eigen::MatrixXd adjacency_matrix() const {
    Eigen::MatrixXd a(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) a(i, j) = adj_[i * n_ + j];
    }
    return a;
  }

  const std::optional<Eigen::MatrixXd>& features() const noexcept { return features_; }
  const std::optional<std::vector<int>>& node_labels() const noexcept { return node_labels_; }
  const std::optional<int>& graph_label() const noexcept { return graph_label_; }

  Graph with_id(std::string id) const {
    Graph g = *this;
    g.id_ = std::move(id);
    return g;
  }

  Graph with_features(Eigen::MatrixXd features) const {
    if (static_cast<std::size_t>(features.rows()) != n_) {
      throw ValidationError("graph '" + id_ + "': feature rows must equal n");
    }
    Graph g = *this;
    g.features_ = std::move(features);
    return g;
  }

  Graph with_node_labels(std::vector<int> labels) const {
    if (labels.size() != n_) throw ValidationError("graph '" + id_ + "': label count must equal n");
    Graph g = *this;
    g.node_labels_ = std::move(labels);
    return g;
  }

  Graph with_graph_label(std::optional<int> label) const {
    Graph g = *this;
    g.graph_label_ = label;
    return g;
  }

  // Toggles each listed unordered pair; attributes are carried over.
  Graph with_toggled(std::span<const Edge> pairs) const {
    Graph g = *this;
    for (auto [u, v] : pairs) {
      if (u == v || u >= n_ || v >= n_) throw InvalidArgument("cannot toggle pair outside the graph");
      g.adj_[u * n_ + v] ^= 1;
      g.adj_[v * n_ + u] ^= 1;
    }
    g.rebuild_lists();
    return g;
  }

  // Same attributes, different structure.
  Graph with_structure(std::vector<std::uint8_t> adjacency) const {
    Graph s = from_adjacency(id_, n_, std::move(adjacency));
    s.features_ = features_;
    s.node_labels_ = node_labels_;
    s.graph_label_ = graph_label_;
    return s;
  }

  bool same_structure(const Graph& other) const noexcept {
    return n_ == other.n_ && adj_ == other.adj_;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    if (a.id_ != b.id_ || !a.same_structure(b) || a.node_labels_ != b.node_labels_ ||
        a.graph_label_ != b.graph_label_ || a.features_.has_value() != b.features_.has_value()) {
      return false;
    }
    if (a.features_) {
      const auto& fa = *a.features_;
      const auto& fb = *b.features_;
      return fa.rows() == fb.rows() && fa.cols() == fb.cols() && fa == fb;
    }
    return true;
  }

 private:
  void rebuild_lists() {
    edge_count_ = 0;
    for (std::size_t u = 0; u < n_; ++u) {
      auto& l = lists_[u];
      l.clear();
      for (std::size_t v = 0; v < n_; ++v) {
        if (adj_[u * n_ + v]) l.push_back(static_cast<Node>(v));
      }
      edge_count_ += l.size();
    }
    edge_count_ /= 2;
  }

  std::string id_;
  std::size_t n_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::vector<Node>> lists_;
  std::size_t edge_count_ = 0;
  std::optional<Eigen::MatrixXd> features_;
  std::optional<std::vector<int>> node_labels_;
  std::optional<int> graph_label_;
};

enum class Provenance { train, test, generated, shadow_member, shadow_nonmember };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::train: return "train";
    case Provenance::test: return "test";
    case Provenance::generated: return "generated";
    case Provenance::shadow_member: return "shadow_member";
    case Provenance::shadow_nonmember: return "shadow_nonmember";
  }
  return "unknown";
}

// Ordered collection of graphs; ids must be unique within a set.
struct GraphSet {
  std::vector<Graph> graphs;
  Provenance provenance = Provenance::generated;

  GraphSet() = default;
  GraphSet(std::vector<Graph> gs, Provenance p) : graphs(std::move(gs)), provenance(p) { validate(); }

  void validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& g : graphs) {
      if (!seen.insert(g.id()).second) {
        throw ValidationError("duplicate graph id '" + g.id() + "' in graph set");
      }
    }
  }

  std::size_t size() const noexcept { return graphs.size(); }
  bool empty() const noexcept { return graphs.empty(); }
  const Graph& operator[](std::size_t i) const { return graphs[i]; }
  auto begin() const { return graphs.begin(); }
  auto end() const { return graphs.end(); }

  friend bool operator==(const GraphSet&, const GraphSet&) = default;
};

inline Graph erdos_renyi(std::size_t n, double density, RngSeed seed, std::string id = "er") {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw InvalidArgument("erdos_renyi: density must lie in [0,1]");
  }
  if (n == 0) throw InvalidArgument("erdos_renyi: n must be >= 1");
  Rng rng = make_rng(seed);
  std::vector<std::uint8_t> adj(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (bernoulli(rng, density)) adj[i * n + j] = adj[j * n + i] = 1;
    }
  }
  return Graph::from_adjacency(std::move(id), n, std::move(adj));
}

// Flips every unordered pair independently with probability p.
inline Graph perturb_flip(const Graph& g, double p, RngSeed seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("perturb_flip: p must lie in [0,1]");
  if (p == 0.0) return g;
  const std::size_t n = g.n();
  Rng rng = make_rng(seed);
  std::vector<std::uint8_t> adj = g.adjacency();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (bernoulli(rng, p)) {
        adj[i * n + j] ^= 1;
        adj[j * n + i] ^= 1;
      }
    }
  }
  return g.with_structure(std::move(adj));
}

// Relabels nodes: node u of g becomes node perm[u]. Attributes follow.
inline Graph permute_nodes(const Graph& g, std::span<const std::size_t> perm) {
  const std::size_t n = g.n();
  if (perm.size() != n) throw InvalidArgument("permutation size mismatch");
  std::vector<std::uint8_t> adj(n * n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (Node v : g.neighbors(u)) adj[perm[u] * n + perm[v]] = 1;
  }
  Graph out = Graph::from_adjacency(g.id(), n, std::move(adj)).with_graph_label(g.graph_label());
  if (g.features()) {
    Eigen::MatrixXd f(g.features()->rows(), g.features()->cols());
    for (std::size_t u = 0; u < n; ++u) f.row(static_cast<Eigen::Index>(perm[u])) = g.features()->row(static_cast<Eigen::Index>(u));
    out = out.with_features(std::move(f));
  }
  if (g.node_labels()) {
    std::vector<int> l(n);
    for (std::size_t u = 0; u < n; ++u) l[perm[u]] = (*g.node_labels())[u];
    out = out.with_node_labels(std::move(l));
  }
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, RngSeed seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  shuffle(perm, rng);
  return perm;
}

inline constexpr std::size_t kIsomorphismNodeLimit = 30;

namespace detail {

class IsoMatcher {
 public:
  IsoMatcher(const Graph& a, const Graph& b) : a_(a), b_(b), n_(a.n()), map_(n_, kNone), used_(n_, 0) {
    // Visit nodes of `a` in BFS order, highest degree first, so each new node
    // is constrained by already-mapped neighbours.
    std::vector<std::uint8_t> seen(n_, 0);
    std::vector<std::size_t> by_degree(n_);
    std::iota(by_degree.begin(), by_degree.end(), std::size_t{0});
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](std::size_t x, std::size_t y) { return a.degree(x) > a.degree(y); });
    for (std::size_t root : by_degree) {
      if (seen[root]) continue;
      seen[root] = 1;
      std::size_t head = order_.size();
      order_.push_back(root);
      while (head < order_.size()) {
        const std::size_t u = order_[head++];
        for (Node v : a.neighbors(u)) {
          if (!seen[v]) {
            seen[v] = 1;
            order_.push_back(v);
          }
        }
      }
    }
  }

  bool run() { return extend(0); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  bool feasible(std::size_t u, std::size_t v, std::size_t depth) const {
    if (a_.degree(u) != b_.degree(v)) return false;
    for (std::size_t k = 0; k < depth; ++k) {
      const std::size_t w = order_[k];
      if (a_.has_edge(u, w) != b_.has_edge(v, map_[w])) return false;
    }
    return true;
  }

  bool extend(std::size_t depth) {
    if (depth == n_) return true;
    const std::size_t u = order_[depth];
    for (std::size_t v = 0; v < n_; ++v) {
      if (used_[v] || !feasible(u, v, depth)) continue;
      map_[u] = v;
      used_[v] = 1;
      if (extend(depth + 1)) return true;
      used_[v] = 0;
      map_[u] = kNone;
    }
    return false;
  }

  const Graph& a_;
  const Graph& b_;
  std::size_t n_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> map_;
  std::vector<std::uint8_t> used_;
};

}  // namespace detail

// Exact isomorphism test by backtracking; limited to 30 nodes.
inline bool is_isomorphic(const Graph& g1, const Graph& g2) {
  if (g1.n() > kIsomorphismNodeLimit || g2.n() > kIsomorphismNodeLimit) {
    throw UnsupportedSize("is_isomorphic supports graphs with at most " +
                          std::to_string(kIsomorphismNodeLimit) + " nodes");
  }
  if (g1.n() != g2.n() || g1.edge_count() != g2.edge_count()) return false;
  std::vector<std::size_t> d1(g1.n()), d2(g2.n());
  for (std::size_t u = 0; u < g1.n(); ++u) {
    d1[u] = g1.degree(u);
    d2[u] = g2.degree(u);
  }
  std::sort(d1.begin(), d1.end());
  std::sort(d2.begin(), d2.end());
  if (d1 != d2) return false;
  return detail::IsoMatcher(g1, g2).run();
}

inline constexpr int kMaxDefaultLabel = 31;

// Node features, falling back to the n x n identity.
inline Eigen::MatrixXd default_features(const Graph& g) {
  if (g.features()) return *g.features();
  const auto n = static_cast<Eigen::Index>(g.n());
  return Eigen::MatrixXd::Identity(n, n);
}

// Node labels, falling back to node degree clipped to [0, 31].
inline std::vector<int> default_labels(const Graph& g) {
  if (g.node_labels()) return *g.node_labels();
  std::vector<int> labels(g.n());
  for (std::size_t u = 0; u < g.n(); ++u) {
    labels[u] = std::min(static_cast<int>(g.degree(u)), kMaxDefaultLabel);
  }
  return labels;
}

}  // namespace graphleak
