#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "graphleak/graph.hpp"
#include "graphleak/metrics.hpp"
#include "graphleak/parallel.hpp"
#include "graphleak/regal.hpp"

namespace graphleak {

// Structural similarity is softened so noisy copies of one graph still land
// near each other.
inline RegalParams attack_regal_defaults() {
  RegalParams p;
  p.gamma_struct = 0.03;
  return p;
}

struct GraParams {
  double top_fraction = 0.10;
  RegalParams regal = attack_regal_defaults();
  // Polish a kept alignment by edge-overlap hill climbing when it preserves
  // less than this fraction of g_i's edges. 0 never refines.
  double refine_below = 0.5;
  // Union of the aligned edge sets instead of the intersection.
  bool use_union = false;
  // Skip a pair whose reconstruction is isomorphic to one already kept.
  bool distinct = true;
};

struct SourcePair {
  std::size_t i = 0;
  std::size_t j = 0;
  double mean_diff = 0.0;
};

struct ReconstructionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched_index = 0;
  std::string matched_train_id;
  std::size_t ties = 0;  // other training graphs reaching the same best F1
};

struct ReconstructionResult {
  GraphSet reconstructed;
  std::vector<SourcePair> source_pairs;
  std::vector<ReconstructionScore> per_graph_scores;  // filled by scoring
};

struct ReconstructionEval {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double r1 = 0.0;  // training graphs exactly recovered
  double r2 = 0.0;  // training graphs recovered with F1 > 0.75
  std::vector<ReconstructionScore> per_graph;
  std::size_t tied_graphs = 0;
};

inline std::size_t kept_pair_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("top-pair fraction must lie in (0,1]");
  return std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
}

inline bool same_graph_up_to_relabeling(const Graph& a, const Graph& b) {
  if (a.n() <= kIsomorphismNodeLimit && b.n() <= kIsomorphismNodeLimit) return is_isomorphic(a, b);
  return a.same_structure(b);
}

// Edge inference for one aligned pair: nodes of g_i, edges of g_i whose
// images under the mapping are edges of g_j (or the union of both edge sets
// transported back onto g_i's nodes).
inline Graph infer_edges(const Graph& gi, const Graph& gj, std::span<const int> mapping, bool use_union,
                         std::string id) {
  std::vector<Edge> kept;
  for (auto [u, v] : gi.edges()) {
    const int a = mapping[u], b = mapping[v];
    const bool shared = a != kUnmatched && b != kUnmatched && gj.has_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    if (shared || use_union) kept.emplace_back(u, v);
  }
  if (use_union) {
    std::vector<int> inverse(gj.n(), kUnmatched);
    for (std::size_t u = 0; u < mapping.size(); ++u) {
      if (mapping[u] != kUnmatched) inverse[static_cast<std::size_t>(mapping[u])] = static_cast<int>(u);
    }
    for (auto [a, b] : gj.edges()) {
      if (inverse[a] != kUnmatched && inverse[b] != kUnmatched) {
        kept.emplace_back(static_cast<Node>(inverse[a]), static_cast<Node>(inverse[b]));
      }
    }
  }
  return Graph::from_edges(std::move(id), gi.n(), kept);
}

inline std::vector<int> aligned_mapping(const Graph& gi, const Graph& gj, const Eigen::MatrixXd& yi,
                                        const Eigen::MatrixXd& yj, std::size_t alpha, double refine_below) {
  auto mapping = align_pair(yi, yj, alpha).mapping;
  if (refine_below <= 0.0 || gi.edge_count() == 0) return mapping;
  const double kept = static_cast<double>(preserved_edges(gi, gj, mapping)) / static_cast<double>(gi.edge_count());
  if (kept < refine_below) mapping = refine_alignment(gi, gj, std::move(mapping));
  return mapping;
}

namespace detail {

// Keeps `want` pairs in order, skipping reconstructions equivalent to one
// already kept; falls back to the skipped ones if distinct ones run out.
template <typename Build>
void select_distinct(std::span<const SourcePair> ranked, std::size_t want, bool distinct, Build&& build,
                     std::vector<Graph>& graphs, std::vector<SourcePair>& pairs) {
  std::vector<std::size_t> skipped;
  for (std::size_t r = 0; r < ranked.size() && graphs.size() < want; ++r) {
    Graph g = build(ranked[r], graphs.size());
    const bool dup = distinct && std::any_of(graphs.begin(), graphs.end(), [&](const Graph& k) {
                       return k.edge_count() == g.edge_count() && same_graph_up_to_relabeling(k, g);
                     });
    if (dup) {
      skipped.push_back(r);
      continue;
    }
    graphs.push_back(std::move(g));
    pairs.push_back(ranked[r]);
  }
  for (std::size_t r : skipped) {
    if (graphs.size() >= want) break;
    graphs.push_back(build(ranked[r], graphs.size()));
    pairs.push_back(ranked[r]);
  }
}

}  // namespace detail

// Graph reconstruction attack over a set of generated graphs.
inline ReconstructionResult run_gra(const GraphSet& generated, const GraParams& params, RngSeed seed,
                                    const Executor& exec = Executor{}) {
  if (generated.size() < 2) throw InvalidArgument("run_gra: at least two generated graphs are required");
  const std::size_t want = kept_pair_count(generated.size(), params.top_fraction);
  const JointEmbedding emb = joint_embed(generated.graphs, params.regal, seed);
  const auto cps = all_counterparts(emb, params.regal.alpha, exec);

  std::vector<SourcePair> ranked(generated.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i] = {i, cps[i].index, cps[i].mean_diff};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const SourcePair& a, const SourcePair& b) { return a.mean_diff < b.mean_diff; });

  ReconstructionResult out;
  std::vector<Graph> graphs;
  auto build = [&](const SourcePair& p, std::size_t slot) {
    const Graph& gi = generated[p.i];
    const Graph& gj = generated[p.j];
    const auto mapping = aligned_mapping(gi, gj, emb.rows[p.i], emb.rows[p.j], params.regal.alpha, params.refine_below);
    return infer_edges(gi, gj, mapping, params.use_union, "rec" + std::to_string(slot));
  };
  detail::select_distinct(ranked, want, params.distinct, build, graphs, out.source_pairs);
  out.reconstructed = GraphSet(std::move(graphs), Provenance::generated);
  return out;
}

// Intersects random pairs of generated graphs on raw node indices.
inline ReconstructionResult baseline2(const GraphSet& generated, double top_fraction, RngSeed seed) {
  if (generated.size() < 2) throw InvalidArgument("baseline2: at least two generated graphs are required");
  const std::size_t want = kept_pair_count(generated.size(), top_fraction);
  Rng rng = make_rng(seed);
  ReconstructionResult out;
  std::vector<Graph> graphs;
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t i = uniform_index(rng, generated.size());
    std::size_t j = uniform_index(rng, generated.size() - 1);
    if (j >= i) ++j;
    const Graph& gi = generated[i];
    const Graph& gj = generated[j];
    graphs.push_back(infer_edges(gi, gj, identity_mapping(gi.n(), gj.n()), false, "rec" + std::to_string(k)));
    out.source_pairs.push_back({i, j, 0.0});
  }
  out.reconstructed = GraphSet(std::move(graphs), Provenance::generated);
  return out;
}

struct EvalParams {
  RegalParams regal = attack_regal_defaults();
  bool refine = true;
  double r2_threshold = 0.75;
};

// Scores reconstructions against the training graphs: every reconstruction is
// aligned to every training graph and matched to the one with the highest
// edge F1 (ties to the lower index).
inline ReconstructionEval evaluate_reconstruction(const GraphSet& rec, const GraphSet& train, const EvalParams& params,
                                                  RngSeed seed, const Executor& exec = Executor{}) {
  if (rec.empty() || train.empty()) throw InvalidArgument("evaluate_reconstruction: both sets must be non-empty");
  std::vector<Graph> all = rec.graphs;
  all.insert(all.end(), train.graphs.begin(), train.graphs.end());
  const JointEmbedding emb = joint_embed(all, params.regal, seed);
  const std::size_t nr = rec.size(), nt = train.size();

  // f1[r * nt + t]
  std::vector<Prf> scores(nr * nt);
  exec.parallel_for(nr, [&](std::size_t r) {
    for (std::size_t t = 0; t < nt; ++t) {
      const auto mapping = aligned_mapping(rec[r], train[t], emb.rows[r], emb.rows[nr + t], params.regal.alpha,
                                             params.refine ? std::numeric_limits<double>::infinity() : 0.0);
      scores[r * nt + t] = edge_prf(rec[r], train[t], mapping);
    }
  });
  std::vector<std::uint8_t> exact(nr * nt, 0);
  exec.parallel_for(nr, [&](std::size_t r) {
    for (std::size_t t = 0; t < nt; ++t) {
      const Graph& a = rec[r];
      const Graph& b = train[t];
      if (a.n() != b.n() || a.edge_count() != b.edge_count()) continue;
      if (a.n() <= kIsomorphismNodeLimit) {
        exact[r * nt + t] = is_isomorphic(a, b);
      } else {
        exact[r * nt + t] = scores[r * nt + t].f1 == 1.0;
      }
    }
  });

  ReconstructionEval ev;
  ev.per_graph.resize(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < nt; ++t) {
      if (scores[r * nt + t].f1 > scores[r * nt + best].f1) best = t;
    }
    auto& s = ev.per_graph[r];
    const Prf& p = scores[r * nt + best];
    s.precision = p.precision;
    s.recall = p.recall;
    s.f1 = p.f1;
    s.matched_index = best;
    s.matched_train_id = train[best].id();
    for (std::size_t t = 0; t < nt; ++t) {
      if (t != best && scores[r * nt + t].f1 == p.f1) ++s.ties;
    }
    if (s.ties) ++ev.tied_graphs;
    ev.precision += s.precision;
    ev.recall += s.recall;
    ev.f1 += s.f1;
  }
  ev.precision /= static_cast<double>(nr);
  ev.recall /= static_cast<double>(nr);
  ev.f1 /= static_cast<double>(nr);
  std::size_t r1 = 0, r2 = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    bool hit = false;
    double best_f1 = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      hit = hit || exact[r * nt + t];
      best_f1 = std::max(best_f1, scores[r * nt + t].f1);
    }
    r1 += hit;
    r2 += best_f1 > params.r2_threshold;
  }
  ev.r1 = static_cast<double>(r1) / static_cast<double>(nt);
  ev.r2 = static_cast<double>(r2) / static_cast<double>(nt);
  return ev;
}

// Generated graphs taken as-is as replicas of the training set.
inline ReconstructionEval baseline1(const GraphSet& generated, const GraphSet& train, const EvalParams& params,
                                    RngSeed seed, const Executor& exec = Executor{}) {
  return evaluate_reconstruction(generated, train, params, seed, exec);
}

}  // namespace graphleak
