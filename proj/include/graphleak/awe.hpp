#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "graphleak/common.hpp"
#include "graphleak/graph.hpp"

namespace graphleak {

inline constexpr std::size_t kMaxWalkLength = 7;

using WalkPattern = std::vector<std::uint8_t>;

namespace detail {

struct PatternTable {
  std::vector<WalkPattern> patterns;
  std::vector<std::uint32_t> codes;  // base-8 code of each pattern, ascending
};

inline std::uint32_t pattern_code(const std::uint8_t* p, std::size_t len) {
  std::uint32_t c = 0;
  for (std::size_t i = 0; i < len; ++i) c = c * 8 + p[i];
  return c;
}

inline void grow_patterns(WalkPattern& cur, std::uint8_t next_new, std::size_t len, PatternTable& out) {
  if (cur.size() == len) {
    out.codes.push_back(pattern_code(cur.data(), len));
    out.patterns.push_back(cur);
    return;
  }
  for (std::uint8_t v = 0; v <= next_new; ++v) {
    if (v == cur.back()) continue;
    cur.push_back(v);
    grow_patterns(cur, v == next_new ? static_cast<std::uint8_t>(next_new + 1) : next_new, len, out);
    cur.pop_back();
  }
}

inline const PatternTable& pattern_table(std::size_t l) {
  static const auto tables = [] {
    std::array<PatternTable, kMaxWalkLength + 1> t{};
    for (std::size_t len = 1; len <= kMaxWalkLength; ++len) {
      WalkPattern cur{0};
      grow_patterns(cur, 1, len + 1, t[len]);
    }
    return t;
  }();
  return tables[l];
}

inline void check_walk_length(std::size_t l) {
  if (l < 1 || l > kMaxWalkLength)
    throw InvalidArgument("walk length must be in [1, " + std::to_string(kMaxWalkLength) + "], got " + std::to_string(l));
}

}  // namespace detail

// All anonymous walk patterns with l steps, in lexicographic order.
inline const std::vector<WalkPattern>& anonymous_patterns(std::size_t l) {
  detail::check_walk_length(l);
  return detail::pattern_table(l).patterns;
}

struct AweVector {
  std::vector<double> dist;
  std::size_t l = 0;
  std::size_t m = 0;
};

inline constexpr std::size_t kDefaultWalkLength = 5;
inline constexpr std::size_t kDefaultWalkCount = 1000;

inline AweVector awe_embedding(const Graph& g, std::size_t l, std::size_t m, RngSeed seed) {
  detail::check_walk_length(l);
  if (m < 1) throw InvalidArgument("awe_embedding: walk count must be positive");
  if (g.edge_count() == 0) throw ValidationError("awe_embedding: graph '" + g.id() + "' has no edges");
  const auto& table = detail::pattern_table(l);

  std::vector<Node> starts;
  for (std::size_t u = 0; u < g.n(); ++u) {
    if (g.degree(u) > 0) starts.push_back(static_cast<Node>(u));
  }

  AweVector out{std::vector<double>(table.patterns.size(), 0.0), l, m};
  Rng rng = make_rng(seed);
  std::array<Node, kMaxWalkLength + 1> seen{};
  std::array<std::uint8_t, kMaxWalkLength + 1> anon{};
  for (std::size_t w = 0; w < m; ++w) {
    Node cur = starts[uniform_index(rng, starts.size())];
    std::size_t distinct = 0;
    for (std::size_t step = 0; step <= l && step <= kMaxWalkLength; ++step) {
      if (step > 0) {
        const auto nb = g.neighbors(cur);
        cur = nb[uniform_index(rng, nb.size())];
      }
      std::size_t idx = 0;
      while (idx < distinct && seen[idx] != cur) ++idx;
      if (idx == distinct) seen[distinct++] = cur;
      anon[step] = static_cast<std::uint8_t>(idx);
    }
    const std::uint32_t code = detail::pattern_code(anon.data(), l + 1);
    const auto it = std::lower_bound(table.codes.begin(), table.codes.end(), code);
    out.dist[static_cast<std::size_t>(it - table.codes.begin())] += 1.0;
  }
  for (double& v : out.dist) v /= static_cast<double>(m);
  return out;
}

inline AweVector awe_embedding(const Graph& g, RngSeed seed) {
  return awe_embedding(g, kDefaultWalkLength, kDefaultWalkCount, seed);
}

enum class Similarity { dot, cosine, expdiff, jsd };

inline constexpr Similarity kAllSimilarities[] = {Similarity::dot, Similarity::cosine, Similarity::expdiff,
                                                  Similarity::jsd};

inline const char* to_string(Similarity s) {
  switch (s) {
    case Similarity::dot: return "dot";
    case Similarity::cosine: return "cosine";
    case Similarity::expdiff: return "expdiff";
    case Similarity::jsd: return "jsd";
  }
  return "unknown";
}

// `degenerate` marks a cosine taken against a zero vector (value 0).
struct SimValue {
  double value = 0.0;
  bool degenerate = false;
};

inline constexpr double kExpDiffClamp = 50.0;

inline SimValue sim(Similarity k, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw InvalidArgument("sim: vectors of different length (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  // Fixed argument order keeps the result bitwise symmetric under contraction.
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) return sim(k, b, a);
  const std::size_t n = a.size();
  switch (k) {
    case Similarity::dot: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
      return {s, false};
    }
    case Similarity::cosine: {
      double s = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return {0.0, true};
      return {s / (std::sqrt(na) * std::sqrt(nb)), false};
    }
    case Similarity::expdiff: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      return {std::exp(std::min(d2, kExpDiffClamp)), false};
    }
    case Similarity::jsd: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mid = 0.5 * (a[i] + b[i]);
        if (a[i] > 0.0) s += 0.5 * a[i] * std::log2(a[i] / mid);
        if (b[i] > 0.0) s += 0.5 * b[i] * std::log2(b[i] / mid);
      }
      return {std::clamp(s, 0.0, 1.0), false};
    }
  }
  return {0.0, false};
}

inline SimValue sim(Similarity k, const AweVector& a, const AweVector& b) {
  if (a.l != b.l)
    throw InvalidArgument("sim: walk lengths differ (" + std::to_string(a.l) + " vs " + std::to_string(b.l) + ")");
  return sim(k, a.dist, b.dist);
}

}  // namespace graphleak
