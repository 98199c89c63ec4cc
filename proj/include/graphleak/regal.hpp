#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "graphleak/graph.hpp"
#include "graphleak/parallel.hpp"

namespace graphleak {

// Knobs for REGAL-style alignment. Zero for landmarks/dim means "derive from
// the node count": landmarks = min(10 ceil(log2 N), N), dim = min(128, landmarks).
struct RegalParams {
  std::size_t hops = 2;
  double delta = 0.5;
  double gamma_struct = 1.0;
  double gamma_attr = 1.0;
  std::size_t landmarks = 0;
  std::size_t dim = 0;
  std::size_t alpha = 5;
  // Featureless graphs use their default (identity) feature rows as node
  // attributes, which carries node order into the embedding.
  bool default_attributes = true;
};

struct NodeIdentity {
  std::vector<double> structure;         // hops x bins, hop-major
  std::optional<Eigen::VectorXd> attributes;
};

inline std::size_t degree_bin(std::size_t degree) {
  std::size_t b = 0;
  while (degree > 1) {
    degree >>= 1;
    ++b;
  }
  return b;
}

inline std::size_t degree_bin_count(std::size_t max_degree) { return degree_bin(std::max<std::size_t>(max_degree, 1)) + 1; }

// Per node: for each hop h <= K, a log2-binned histogram of the degrees of
// nodes at distance exactly h, scaled by delta^(h-1). `bins` = 0 sizes the
// histogram from this graph's max degree.
inline std::vector<NodeIdentity> extract_identities(const Graph& g, std::size_t hops, double delta,
                                                    std::size_t bins = 0, bool default_attributes = false) {
  if (hops < 1) throw InvalidArgument("extract_identities: hops must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("extract_identities: delta must lie in (0,1]");
  if (bins == 0) bins = degree_bin_count(g.max_degree());
  const std::size_t n = g.n();
  std::vector<NodeIdentity> ids(n);
  std::vector<std::size_t> dist(n);
  std::vector<std::size_t> frontier, next;
  const std::size_t unseen = std::numeric_limits<std::size_t>::max();
  std::optional<Eigen::MatrixXd> attrs;
  if (g.features()) {
    attrs = *g.features();
  } else if (default_attributes) {
    attrs = default_features(g);
  }
  for (std::size_t s = 0; s < n; ++s) {
    auto& id = ids[s];
    id.structure.assign(hops * bins, 0.0);
    std::fill(dist.begin(), dist.end(), unseen);
    dist[s] = 0;
    frontier.assign(1, s);
    double weight = 1.0;
    for (std::size_t h = 1; h <= hops && !frontier.empty(); ++h) {
      next.clear();
      for (std::size_t u : frontier) {
        for (Node v : g.neighbors(u)) {
          if (dist[v] != unseen) continue;
          dist[v] = h;
          next.push_back(v);
          const std::size_t b = std::min(degree_bin(g.degree(v)), bins - 1);
          id.structure[(h - 1) * bins + b] += weight;
        }
      }
      frontier.swap(next);
      weight *= delta;
    }
    if (attrs) id.attributes = attrs->row(static_cast<Eigen::Index>(s)).transpose();
  }
  return ids;
}

struct JointEmbedding {
  std::vector<Eigen::MatrixXd> rows;  // one n_i x dim matrix per graph
  std::size_t dim = 0;
  std::size_t landmark_count = 0;
  bool shrunk = false;                // requested dim exceeded the effective rank
};

namespace detail {

inline double attribute_distance(const std::optional<Eigen::VectorXd>& a, const std::optional<Eigen::VectorXd>& b) {
  if (!a && !b) return 0.0;
  const Eigen::Index la = a ? a->size() : 0;
  const Eigen::Index lb = b ? b->size() : 0;
  double count = 0.0;
  for (Eigen::Index k = 0; k < std::max(la, lb); ++k) {
    const double x = k < la ? (*a)(k) : 0.0;
    const double y = k < lb ? (*b)(k) : 0.0;
    if (x != y) count += 1.0;
  }
  return count;
}

inline double structure_distance2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Low-rank node embeddings shared by all graphs: node-to-landmark similarities
// C, landmark block W = Q diag(lambda) Q^T, Y = C Q lambda^{-1/2} truncated to
// the leading `dim` eigen-directions and row-normalised.
inline JointEmbedding joint_embed(std::span<const Graph> graphs, const RegalParams& params, RngSeed seed) {
  if (graphs.empty()) throw InvalidArgument("joint_embed: no graphs");
  std::size_t max_degree = 0;
  std::size_t total = 0;
  for (const auto& g : graphs) {
    max_degree = std::max(max_degree, g.max_degree());
    total += g.n();
  }
  const std::size_t bins = degree_bin_count(max_degree);

  std::vector<NodeIdentity> all;
  all.reserve(total);
  for (const auto& g : graphs) {
    auto ids = extract_identities(g, params.hops, params.delta, bins, params.default_attributes);
    std::move(ids.begin(), ids.end(), std::back_inserter(all));
  }

  std::size_t landmarks = params.landmarks;
  if (landmarks == 0) {
    const auto log_n = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(total, 2)))));
    landmarks = std::min(10 * log_n, total);
  }
  if (landmarks > total) throw InvalidArgument("joint_embed: more landmarks than nodes");
  const std::size_t want_dim = params.dim == 0 ? std::min<std::size_t>(128, landmarks) : params.dim;

  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < landmarks; ++i) std::swap(pool[i], pool[i + uniform_index(rng, total - i)]);
  pool.resize(landmarks);
  std::sort(pool.begin(), pool.end());

  Eigen::MatrixXd c(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(landmarks));
  for (std::size_t u = 0; u < total; ++u) {
    for (std::size_t l = 0; l < landmarks; ++l) {
      const auto& a = all[u];
      const auto& b = all[pool[l]];
      const double s = params.gamma_struct * detail::structure_distance2(a.structure, b.structure) +
                       params.gamma_attr * detail::attribute_distance(a.attributes, b.attributes);
      c(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(l)) = std::exp(-s);
    }
  }
  Eigen::MatrixXd w(static_cast<Eigen::Index>(landmarks), static_cast<Eigen::Index>(landmarks));
  for (std::size_t l = 0; l < landmarks; ++l) w.row(static_cast<Eigen::Index>(l)) = c.row(static_cast<Eigen::Index>(pool[l]));
  w = 0.5 * (w + w.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double top = lambda.size() ? lambda(lambda.size() - 1) : 0.0;
  const double tol = std::max(top, 0.0) * 1e-10;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) > tol) ++rank;
  }
  JointEmbedding out;
  out.landmark_count = landmarks;
  out.dim = std::min(want_dim, rank);
  out.shrunk = want_dim > rank;
  Eigen::MatrixXd proj(static_cast<Eigen::Index>(landmarks), static_cast<Eigen::Index>(out.dim));
  for (std::size_t k = 0; k < out.dim; ++k) {
    const Eigen::Index src = lambda.size() - 1 - static_cast<Eigen::Index>(k);
    proj.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(src) / std::sqrt(lambda(src));
  }
  Eigen::MatrixXd y = c * proj;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double norm = y.row(r).norm();
    if (norm > 0.0) y.row(r) /= norm;
  }
  std::size_t offset = 0;
  for (const auto& g : graphs) {
    out.rows.push_back(y.middleRows(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(g.n())));
    offset += g.n();
  }
  return out;
}

inline constexpr double kDiffExponentClamp = 50.0;

inline double diff_from_distance2(double d2) { return std::exp(std::min(std::max(d2, 0.0), kDiffExponentClamp)); }

// exp(min(||a - b||^2, 50)).
template <typename A, typename B>
double diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw InvalidArgument("diff: dimension mismatch");
  return diff_from_distance2((a - b).squaredNorm());
}

inline constexpr int kUnmatched = -1;

struct AlignmentResult {
  std::vector<int> mapping;            // node of g_i -> node of g_j, or kUnmatched
  std::vector<double> per_node_diff;   // one entry per node of g_i
  double mean_diff = 1.0;
};

namespace detail {

struct AlignWorkspace {
  Eigen::MatrixXd dist2;
  std::vector<int> order;
  std::vector<std::pair<double, std::int64_t>> pairs;  // (distance, u * nj + v)
  std::vector<std::uint8_t> used;
  std::vector<int> match;
};

// Greedy top-alpha matching of the rows of yi onto the rows of yj. Candidate
// pairs (u, v), v among the alpha nearest rows of u, are taken in ascending
// distance (ties to lower u, then lower v) whenever both ends are free. Nodes
// left over take the nearest unmatched row; once g_j is exhausted they are
// scored against their nearest row and stay unmatched.
inline double greedy_align(const Eigen::MatrixXd& yi, const Eigen::MatrixXd& yj, std::size_t alpha,
                           AlignWorkspace& ws, int* mapping, double* per_node) {
  const Eigen::Index ni = yi.rows(), nj = yj.rows();
  if (ni == 0) return 1.0;
  ws.dist2.noalias() = -2.0 * yi * yj.transpose();
  ws.dist2.colwise() += yi.rowwise().squaredNorm();
  ws.dist2.rowwise() += yj.rowwise().squaredNorm().transpose();
  ws.order.resize(static_cast<std::size_t>(nj));
  ws.used.assign(static_cast<std::size_t>(nj), 0);
  ws.match.assign(static_cast<std::size_t>(ni), kUnmatched);
  ws.pairs.clear();
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(std::max<std::size_t>(alpha, 1), static_cast<std::size_t>(nj)));
  for (Eigen::Index u = 0; u < ni; ++u) {
    auto row = ws.dist2.row(u);
    std::iota(ws.order.begin(), ws.order.end(), 0);
    auto closer = [&](int a, int b) { return row(a) < row(b) || (row(a) == row(b) && a < b); };
    std::partial_sort(ws.order.begin(), ws.order.begin() + k, ws.order.end(), closer);
    for (Eigen::Index c = 0; c < k; ++c) {
      const int v = ws.order[static_cast<std::size_t>(c)];
      ws.pairs.emplace_back(row(v), static_cast<std::int64_t>(u) * nj + v);
    }
  }
  std::sort(ws.pairs.begin(), ws.pairs.end());
  Eigen::Index matched = 0;
  for (const auto& [d, key] : ws.pairs) {
    const auto u = static_cast<std::size_t>(key / nj);
    const auto v = static_cast<std::size_t>(key % nj);
    if (ws.match[u] != kUnmatched || ws.used[v]) continue;
    ws.match[u] = static_cast<int>(v);
    ws.used[v] = 1;
    ++matched;
  }
  double total = 0.0;
  for (Eigen::Index u = 0; u < ni; ++u) {
    auto row = ws.dist2.row(u);
    int pick = ws.match[static_cast<std::size_t>(u)];
    if (pick == kUnmatched && matched < nj) {
      for (Eigen::Index v = 0; v < nj; ++v) {
        if (!ws.used[static_cast<std::size_t>(v)] && (pick == kUnmatched || row(v) < row(pick))) pick = static_cast<int>(v);
      }
      ws.used[static_cast<std::size_t>(pick)] = 1;
      ++matched;
    }
    double d;
    if (pick != kUnmatched) {
      d = diff_from_distance2(row(pick));
    } else {
      Eigen::Index nearest = 0;
      row.minCoeff(&nearest);
      d = diff_from_distance2(row(nearest));
    }
    if (mapping) mapping[u] = pick;
    if (per_node) per_node[u] = d;
    total += d;
  }
  return total / static_cast<double>(ni);
}

}  // namespace detail

inline AlignmentResult align_pair(const Eigen::MatrixXd& yi, const Eigen::MatrixXd& yj, std::size_t alpha) {
  if (yi.cols() != yj.cols()) throw InvalidArgument("align_pair: embedding dimension mismatch");
  AlignmentResult r;
  r.mapping.resize(static_cast<std::size_t>(yi.rows()));
  r.per_node_diff.resize(static_cast<std::size_t>(yi.rows()));
  detail::AlignWorkspace ws;
  r.mean_diff = detail::greedy_align(yi, yj, alpha, ws, r.mapping.data(), r.per_node_diff.data());
  return r;
}

inline std::size_t preserved_edges(const Graph& gi, const Graph& gj, std::span<const int> mapping) {
  std::size_t count = 0;
  for (auto [u, v] : gi.edges()) {
    const int a = mapping[u], b = mapping[v];
    if (a != kUnmatched && b != kUnmatched && gj.has_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) ++count;
  }
  return count;
}

// Hill climbing on the number of edges of g_i preserved in g_j: swap the
// images of two nodes, or move a node onto an unused node of g_j, whenever
// that strictly increases the count. Starts from (and keeps the injectivity
// of) the given mapping.
inline std::vector<int> refine_alignment(const Graph& gi, const Graph& gj, std::vector<int> mapping,
                                         std::size_t max_passes = 50) {
  const std::size_t ni = gi.n(), nj = gj.n();
  std::vector<std::uint8_t> used(nj, 0);
  for (int m : mapping) {
    if (m != kUnmatched) used[static_cast<std::size_t>(m)] = 1;
  }
  auto linked = [&](int a, int b) {
    return a != kUnmatched && b != kUnmatched && gj.has_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  };
  // Gain of giving u the image `to` instead of its current one; `skip` is a
  // neighbour whose image changes simultaneously (handled by the caller).
  auto gain = [&](std::size_t u, int to, std::size_t skip) {
    int delta = 0;
    for (Node w : gi.neighbors(u)) {
      if (w == skip) continue;
      delta += static_cast<int>(linked(to, mapping[w])) - static_cast<int>(linked(mapping[u], mapping[w]));
    }
    return delta;
  };
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (std::size_t u1 = 0; u1 < ni; ++u1) {
      for (std::size_t u2 = u1 + 1; u2 < ni; ++u2) {
        if (mapping[u1] == mapping[u2]) continue;
        const int g = gain(u1, mapping[u2], u2) + gain(u2, mapping[u1], u1);
        if (g > 0) {
          std::swap(mapping[u1], mapping[u2]);
          improved = true;
        }
      }
      for (std::size_t v = 0; v < nj; ++v) {
        if (used[v]) continue;
        if (gain(u1, static_cast<int>(v), ni) > 0) {
          if (mapping[u1] != kUnmatched) used[static_cast<std::size_t>(mapping[u1])] = 0;
          mapping[u1] = static_cast<int>(v);
          used[v] = 1;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return mapping;
}

struct Counterpart {
  std::size_t index = 0;
  double mean_diff = 0.0;
};

// Most similar candidate for graph `i` among all graphs of the embedding
// except `i` itself (ties to the lower index).
inline Counterpart counterpart(const JointEmbedding& emb, std::size_t i, std::size_t alpha) {
  if (emb.rows.size() < 2) throw InvalidArgument("counterpart: empty candidate set");
  detail::AlignWorkspace ws;
  Counterpart best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < emb.rows.size(); ++j) {
    if (j == i) continue;
    const double d = detail::greedy_align(emb.rows[i], emb.rows[j], alpha, ws, nullptr, nullptr);
    if (d < best.mean_diff) best = {j, d};
  }
  return best;
}

// Counterpart of `target` among explicit candidate embeddings.
inline Counterpart counterpart(const Eigen::MatrixXd& target, std::span<const Eigen::MatrixXd> candidates,
                               std::size_t alpha) {
  if (candidates.empty()) throw InvalidArgument("counterpart: empty candidate set");
  detail::AlignWorkspace ws;
  Counterpart best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double d = detail::greedy_align(target, candidates[j], alpha, ws, nullptr, nullptr);
    if (d < best.mean_diff) best = {j, d};
  }
  return best;
}

inline std::vector<Counterpart> all_counterparts(const JointEmbedding& emb, std::size_t alpha, const Executor& exec) {
  return exec.map<Counterpart>(emb.rows.size(), [&](std::size_t i) { return counterpart(emb, i, alpha); });
}

}  // namespace graphleak
