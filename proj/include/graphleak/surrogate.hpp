#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphleak/graph.hpp"
#include "graphleak/stats.hpp"

namespace graphleak {

enum class SurrogateMode { memorize, density_matched_random };

inline const char* to_string(SurrogateMode m) {
  return m == SurrogateMode::memorize ? "memorize" : "density_matched_random";
}

inline SurrogateMode parse_surrogate_mode(const std::string& s) {
  if (s == "memorize") return SurrogateMode::memorize;
  if (s == "density_matched_random") return SurrogateMode::density_matched_random;
  throw InvalidArgument("unknown surrogate mode '" + s + "'");
}

// Black-box stand-in for a trained graph generator. In memorize mode it
// replays noisy copies of its training graphs; in density_matched_random mode
// it only keeps per-graph (n, density) and samples Erdos-Renyi graphs.
class SurrogateModel {
 public:
  struct Options {
    SurrogateMode mode = SurrogateMode::memorize;
    double flip_probability = 0.0;
    // Emit memorized copies under a fresh random node order.
    bool permute_outputs = false;
    std::string id_prefix = "gen";
  };

  static SurrogateModel train(const GraphSet& gs, const Options& options, RngSeed seed) {
    if (gs.empty()) throw InvalidArgument("surrogate: training set must be non-empty");
    if (!(options.flip_probability >= 0.0 && options.flip_probability <= 1.0)) {
      throw InvalidArgument("surrogate: flip probability must lie in [0,1]");
    }
    SurrogateModel m;
    m.options_ = options;
    m.seed_ = seed;
    if (options.mode == SurrogateMode::memorize) {
      m.training_ = gs.graphs;
      for (std::size_t i = 0; i < m.training_.size(); ++i) {
        m.index_.emplace(structure_key(m.training_[i]), i);
      }
    } else {
      for (const auto& g : gs) m.stats_.push_back({g.n(), density(g)});
    }
    return m;
  }

  const Options& options() const noexcept { return options_; }
  RngSeed seed() const noexcept { return seed_; }
  std::size_t training_size() const noexcept {
    return options_.mode == SurrogateMode::memorize ? training_.size() : stats_.size();
  }

  // Member test on exact structure (same n and adjacency).
  bool is_member(const Graph& g) const {
    if (options_.mode != SurrogateMode::memorize) return false;
    auto [lo, hi] = index_.equal_range(structure_key(g));
    for (auto it = lo; it != hi; ++it) {
      if (training_[it->second].same_structure(g)) return true;
    }
    return false;
  }

  // Unconditioned sampling. Output i of call `stream` is a pure function of
  // (model seed, stream, i).
  GraphSet generate(std::size_t count, std::uint64_t stream = 0) const {
    if (count == 0) throw InvalidArgument("generate: count must be >= 1");
    std::vector<Graph> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample(derive(seed_, 1, stream, i), i));
    return GraphSet(std::move(out), Provenance::generated);
  }

  // Conditioned sampling: a member input yields noisy copies of itself,
  // anything else yields ordinary unconditioned draws.
  GraphSet generate_conditioned(const Graph& g, std::size_t count, std::uint64_t stream = 0) const {
    if (count == 0) throw InvalidArgument("generate_conditioned: count must be >= 1");
    if (!is_member(g)) return generate(count, stream);
    std::vector<Graph> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(noisy_copy(g, derive(seed_, 1, stream, i), i));
    }
    return GraphSet(std::move(out), Provenance::generated);
  }

 private:
  struct SizeDensity {
    std::size_t n;
    double density;
  };

  static std::uint64_t structure_key(const Graph& g) {
    const auto& a = g.adjacency();
    return fnv1a(std::string_view(reinterpret_cast<const char*>(a.data()), a.size()), g.n());
  }

  std::string output_id(std::size_t i) const { return options_.id_prefix + std::to_string(i); }

  Graph noisy_copy(const Graph& g, RngSeed seed, std::size_t i) const {
    Graph out = perturb_flip(g, options_.flip_probability, derive(seed, 0));
    if (options_.permute_outputs) out = permute_nodes(out, random_permutation(out.n(), derive(seed, 1)));
    return out.with_id(output_id(i));
  }

  Graph sample(RngSeed seed, std::size_t i) const {
    Rng rng = make_rng(derive(seed, 2));
    if (options_.mode == SurrogateMode::memorize) {
      return noisy_copy(training_[uniform_index(rng, training_.size())], seed, i);
    }
    const SizeDensity& s = stats_[uniform_index(rng, stats_.size())];
    return erdos_renyi(s.n, s.density, derive(seed, 3), output_id(i));
  }

  Options options_;
  RngSeed seed_;
  std::vector<Graph> training_;
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
  std::vector<SizeDensity> stats_;
};

}  // namespace graphleak
