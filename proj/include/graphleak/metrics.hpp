#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "graphleak/graph.hpp"
#include "graphleak/regal.hpp"

namespace graphleak {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
};

inline Prf prf_from_counts(std::size_t tp, std::size_t predicted, std::size_t truth) {
  Prf r;
  r.true_positives = tp;
  r.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  r.recall = truth ? static_cast<double>(tp) / static_cast<double>(truth) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

// Edge-level precision/recall/F1 of `predicted` against `truth`, with
// predicted node u standing for truth node mapping[u] (kUnmatched: nowhere).
inline Prf edge_prf(const Graph& predicted, const Graph& truth, std::span<const int> mapping) {
  if (mapping.size() != predicted.n()) throw InvalidArgument("edge_prf: mapping size must equal predicted n");
  return prf_from_counts(preserved_edges(predicted, truth, mapping), predicted.edge_count(), truth.edge_count());
}

inline std::vector<int> identity_mapping(std::size_t n, std::size_t into) {
  std::vector<int> m(n, kUnmatched);
  for (std::size_t u = 0; u < std::min(n, into); ++u) m[u] = static_cast<int>(u);
  return m;
}

struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;  // 0/1

  void validate() const {
    if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    const auto neg = std::count(labels.begin(), labels.end(), 0);
    if (pos + neg != static_cast<std::ptrdiff_t>(labels.size())) throw InvalidArgument("labels must be 0 or 1");
    if (pos == 0 || neg == 0) throw InvalidArgument("both classes are required");
  }
};

// Mann-Whitney AUC from average ranks; ties count one half.
inline double roc_auc(const ScoredLabels& s) {
  s.validate();
  const std::size_t n = s.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (s.labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(pos);
  const double nn = static_cast<double>(n - pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Highest TPR over thresholds t (predict positive iff score >= t) whose FPR
// does not exceed `fpr`; step function, no interpolation.
inline double tpr_at_fpr(const ScoredLabels& s, double fpr) {
  s.validate();
  if (!(fpr > 0.0 && fpr < 1.0)) throw InvalidArgument("tpr_at_fpr: fpr must lie in (0,1)");
  const std::size_t n = s.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  const double np = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
  const double nn = static_cast<double>(n) - np;
  double best = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) {
      (s.labels[order[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    if (static_cast<double>(fp) / nn <= fpr) best = std::max(best, static_cast<double>(tp) / np);
    i = j;
  }
  return best;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) throw InvalidArgument("accuracy: size mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

}  // namespace graphleak
