// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Criterion numbers given as arguments restrict the run to those.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "graphleak/awe.hpp"
#include "graphleak/defense.hpp"
#include "graphleak/gra.hpp"
#include "graphleak/metrics.hpp"
#include "graphleak/mia.hpp"
#include "graphleak/pia.hpp"
#include "graphleak/pipeline.hpp"
#include "graphleak/stats.hpp"
#include "graphleak/surrogate.hpp"

using namespace graphleak;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x / n;
  if (xs.size() < 2) return m;
  double v = 0.0;
  for (double x : xs) v += (x - m.mean) * (x - m.mean);
  m.se = std::sqrt(v / (n - 1) / n);
  return m;
}

bool non_increasing_within_3se(const std::vector<Moments>& ms) {
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i].mean > ms[i - 1].mean + 3.0 * std::hypot(ms[i].se, ms[i - 1].se)) return false;
  return true;
}

std::string series(const std::vector<Moments>& ms) {
  std::string s;
  for (const auto& m : ms) s += (s.empty() ? "" : ",") + fmt("%.3f", m.mean);
  return "[" + s + "]";
}

GraphSet er_corpus(std::size_t count, std::size_t n, double density, RngSeed seed, const std::string& prefix = "t") {
  std::vector<Graph> gs;
  for (std::size_t i = 0; i < count; ++i) gs.push_back(erdos_renyi(n, density, derive(seed, i), prefix + std::to_string(i)));
  return GraphSet(std::move(gs), Provenance::train);
}

// Sizes and densities drawn uniformly per graph.
GraphSet mixed_corpus(std::size_t count, std::size_t n_lo, std::size_t n_hi, double d_lo, double d_hi, RngSeed seed) {
  std::vector<Graph> gs;
  Rng rng = make_rng(derive(seed, 0));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = n_lo + uniform_index(rng, n_hi - n_lo + 1);
    const double d = d_lo + (d_hi - d_lo) * uniform01(rng);
    gs.push_back(erdos_renyi(n, d, derive(seed, 1, i), "c" + std::to_string(i)));
  }
  return GraphSet(std::move(gs), Provenance::train);
}

GraphSet two_class_corpus(std::size_t count, RngSeed seed) {
  std::vector<Graph> gs;
  for (std::size_t i = 0; i < count; ++i) {
    const int c = static_cast<int>(i % 2);
    gs.push_back(erdos_renyi(12, c ? 0.45 : 0.25, derive(seed, i), "u" + std::to_string(i)).with_graph_label(c));
  }
  return GraphSet(std::move(gs), Provenance::train);
}

SurrogateModel::Options memorize(double p) {
  SurrogateModel::Options o;
  o.flip_probability = p;
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const GraphSet train = er_corpus(20, 15, 0.3, RngSeed{s});
    const GraphSet gen = SurrogateModel::train(train, memorize(0.0), derive(RngSeed{s}, 1)).generate(200);
    const auto rec = run_gra(gen, {}, derive(RngSeed{s}, 2));
    const auto ev = evaluate_reconstruction(rec.reconstructed, train, {}, derive(RngSeed{s}, 3));
    o.require(ev.f1 == 1.0 && ev.r1 == 1.0 && ev.r2 == 1.0,
              "seed " + std::to_string(s) + " F1/R1/R2 " + fmt("%.4f/", ev.f1) + fmt("%.4f/%.4f", ev.r1, ev.r2));
  }
  return o;
}

Outcome criterion2() {
  Outcome o;
  const double p = 0.1;
  std::vector<double> precision, recall;
  int wins = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed{static_cast<std::uint64_t>(1000 + s)};
    const GraphSet train = er_corpus(50, 20, 0.3, seed);
    const GraphSet gen = SurrogateModel::train(train, memorize(p), derive(seed, 1)).generate(500);
    const auto rec = run_gra(gen, {}, derive(seed, 2));
    const auto ev = evaluate_reconstruction(rec.reconstructed, train, {}, derive(seed, 3));
    const auto b2 = baseline2(gen, GraParams{}.top_fraction, derive(seed, 4));
    const auto eb = evaluate_reconstruction(b2.reconstructed, train, {}, derive(seed, 3));
    precision.push_back(ev.precision);
    recall.push_back(ev.recall);
    wins += ev.f1 >= eb.f1;
  }
  const double r = moments(recall).mean, pr = moments(precision).mean;
  const double want = (1 - p) * (1 - p);
  o.require(std::abs(r - want) <= 0.05, fmt("mean recall %.3f vs %.3f", r, want));
  o.require(pr >= 0.95, fmt("mean precision %.3f", pr));
  o.require(wins >= 16, "attack >= baseline-2 on " + std::to_string(wins) + "/20 seeds");
  return o;
}

Outcome criterion3() {
  Outcome o;
  {
    const GraphSet train = mixed_corpus(40, 10, 30, 0.1, 0.5, RngSeed{3});
    const auto model = SurrogateModel::train(train, memorize(0.0), RngSeed{4});
    std::vector<Graph> out;
    for (std::size_t i = 0; i < train.size(); ++i)
      out.push_back(model.generate_conditioned(train[i], 1, i)[0].with_id("gen" + std::to_string(i)));
    const GraphSet gen(std::move(out), Provenance::generated);
    double worst = 0.0;
    for (std::size_t k : {5u, 10u}) {
      const PiaReport r = infer_properties(gen, kAllProperties, k, &train);
      for (const auto& pi : r.properties) worst = std::max(worst, pi.abs_diff);
    }
    o.require(worst == 0.0, fmt("p=0 max D %.3g", worst));
  }
  {
    const double p = 0.05;
    const GraphSet train = mixed_corpus(50, 20, 20, 0.1, 0.5, RngSeed{5});
    double d = 0.0;
    for (const auto& g : train) d += density(g) / static_cast<double>(train.size());
    const GraphSet gen = SurrogateModel::train(train, memorize(p), RngSeed{6}).generate(2000);
    const Property props[] = {Property::density};
    const double inferred = infer_properties(gen, props, 5).properties[0].inferred.mean;
    const Moments m = moments(collect_property(gen, Property::density).values);
    const double want = d * (1 - p) + (1 - d) * p;
    o.require(std::abs(inferred - want) <= 3 * m.se,
              fmt("p=0.05 density %.4f vs %.4f", inferred, want) + fmt(" (3se %.4f)", 3 * m.se));
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  const int seeds = 10;
  std::vector<double> auc, tpr, random_auc, permuted_auc;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed{static_cast<std::uint64_t>(s)};
    const GraphSet ds = mixed_corpus(200, 10, 30, 0.1, 0.5, derive(seed, 1));
    MiaConfig c;
    c.query.generations = 100;
    const auto r = run_mia_experiment(ds, MiaSetting::non_transfer, c, surrogate_factory(memorize(0.05)), derive(seed, 2));
    auc.push_back(r.auc);
    tpr.push_back(r.tpr_at_fpr);
    SurrogateModel::Options rnd = memorize(0.05);
    rnd.mode = SurrogateMode::density_matched_random;
    random_auc.push_back(run_mia_experiment(ds, MiaSetting::non_transfer, c, surrogate_factory(rnd), derive(seed, 2)).auc);
    MiaConfig pc = c;
    pc.permute_labels = true;
    permuted_auc.push_back(
        run_mia_experiment(ds, MiaSetting::non_transfer, pc, surrogate_factory(memorize(0.05)), derive(seed, 2)).auc);
  }
  const double a = moments(auc).mean, t = moments(tpr).mean;
  const double ra = moments(random_auc).mean, pa = moments(permuted_auc).mean;
  o.require(a >= 0.9, fmt("AUC %.3f (min %.3f)", a, *std::min_element(auc.begin(), auc.end())));
  o.require(t >= 0.5, fmt("TPR@0.1FPR %.3f (min %.3f)", t, *std::min_element(tpr.begin(), tpr.end())));
  o.require(std::abs(ra - 0.5) <= 0.1, fmt("random-generator AUC %.3f", ra));
  o.require(std::abs(pa - 0.5) <= 0.1, fmt("permuted-label AUC %.3f", pa));
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::vector<double> auc;
  for (int s = 0; s < 5; ++s) {
    const RngSeed seed{static_cast<std::uint64_t>(50 + s)};
    const GraphSet shadow = mixed_corpus(200, 10, 30, 0.1, 0.5, derive(seed, 1));
    const GraphSet target = mixed_corpus(200, 25, 40, 0.05, 0.2, derive(seed, 2));
    MiaConfig c;
    c.query.generations = 100;
    auc.push_back(
        run_mia_experiment(shadow, MiaSetting::transfer, c, surrogate_factory(memorize(0.05)), derive(seed, 3), &target)
            .auc);
  }
  const Moments m = moments(auc);
  o.require(m.mean >= 0.7, fmt("transfer AUC %.3f (min %.3f)", m.mean, *std::min_element(auc.begin(), auc.end())));
  return o;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(1e-3, std::abs(a) + std::abs(b)); }

Outcome criterion6() {
  Outcome o;
  double adj = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Graph g = erdos_renyi(6 + s % 7, 0.2 + 0.03 * static_cast<double>(s % 10), RngSeed{s});
    const GcnData data = GcnData::from(g);
    const GcnModel model = GcnModel::init(data.x.cols(), 8, data.classes, RngSeed{s + 1000});
    const Eigen::MatrixXd a = g.adjacency_matrix();
    const Eigen::MatrixXd grad = adjacency_gradient(a, data, model);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
        Eigen::MatrixXd up = a, down = a;
        up(i, j) += h;
        up(j, i) += h;
        down(i, j) -= h;
        down(j, i) -= h;
        const double fd = (gcn_forward(up, data, model).loss - gcn_forward(down, data, model).loss) / (4 * h);
        adj = std::max(adj, relative_error(grad(i, j), fd));
      }
    }
  }
  double mlp = 0.0;
  Rng rng = make_rng(RngSeed{7});
  for (std::uint64_t t = 0; t < 20; ++t) {
    Eigen::MatrixXd x(10, 5);
    Eigen::VectorXd y(10);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
    for (Eigen::Index i = 0; i < 10; ++i) y(i) = static_cast<double>(uniform_index(rng, 2));
    Network net = Network::init(ClassifierKind::mlp, 5, 8, RngSeed{t});
    for (Eigen::Index i = 0; i < net.b1.size(); ++i) net.b1(i) = 0.2 * uniform01(rng) - 0.1;
    const Network g = network_gradient(net, x, y);
    Network probe = net;
    const double h = 1e-6;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = network_loss(probe, x, y);
      param = saved - h;
      const double down = network_loss(probe, x, y);
      param = saved;
      mlp = std::max(mlp, relative_error(analytic, (up - down) / (2 * h)));
    };
    for (Eigen::Index i = 0; i < probe.w1.size(); ++i) check(probe.w1.data()[i], g.w1.data()[i]);
    for (Eigen::Index i = 0; i < probe.b1.size(); ++i) check(probe.b1(i), g.b1(i));
    for (Eigen::Index i = 0; i < probe.w2.size(); ++i) check(probe.w2(i), g.w2(i));
    check(probe.b2, g.b2);
  }
  o.require(adj <= 1e-4, fmt("adjacency worst rel err %.2e", adj));
  o.require(mlp <= 1e-4, fmt("MLP worst rel err %.2e", mlp));
  return o;
}

// Nash-Williams over every vertex subset, adjacency as bitmasks.
std::size_t arboricity_oracle(const std::vector<std::uint32_t>& adj) {
  const std::size_t n = adj.size();
  std::size_t best = 0;
  for (std::uint32_t s = 1; s < (1u << n); ++s) {
    const int k = std::popcount(s);
    if (k < 2) continue;
    std::size_t twice = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (s & (1u << v)) twice += static_cast<std::size_t>(std::popcount(adj[v] & s));
    const std::size_t e = twice / 2;
    best = std::max(best, (e + static_cast<std::size_t>(k) - 2) / static_cast<std::size_t>(k - 1));
  }
  return best;
}

Graph from_mask(std::size_t n, std::uint64_t mask, std::vector<std::uint32_t>& adj) {
  std::vector<Edge> edges;
  adj.assign(n, 0);
  std::size_t b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++b) {
      if (!(mask >> b & 1u)) continue;
      edges.emplace_back(static_cast<Node>(i), static_cast<Node>(j));
      adj[i] |= 1u << j;
      adj[j] |= 1u << i;
    }
  }
  return Graph::from_edges("m", n, edges);
}

Outcome criterion7() {
  Outcome o;
  {
    double worst = 0.0;
    Rng rng = make_rng(RngSeed{1});
    for (int t = 0; t < 50; ++t) {
      ScoredLabels s;
      for (int i = 0; i < 200; ++i) {
        // Coarse scores force ties.
        s.scores.push_back(std::floor(uniform01(rng) * 40.0) / 40.0);
        s.labels.push_back(static_cast<int>(uniform_index(rng, 2)));
      }
      double wins = 0.0, pairs = 0.0;
      for (std::size_t i = 0; i < s.scores.size(); ++i)
        for (std::size_t j = 0; j < s.scores.size(); ++j)
          if (s.labels[i] == 1 && s.labels[j] == 0) {
            pairs += 1.0;
            wins += s.scores[i] > s.scores[j] ? 1.0 : s.scores[i] == s.scores[j] ? 0.5 : 0.0;
          }
      worst = std::max(worst, std::abs(roc_auc(s) - wins / pairs));
    }
    o.require(worst <= 1e-12, fmt("roc_auc max err %.1e", worst));
  }
  {
    // Every labeled graph up to 7 nodes, then random 8-node graphs.
    std::size_t checked = 0, wrong = 0;
    std::vector<std::uint32_t> adj;
    for (std::size_t n = 1; n <= 7; ++n) {
      const std::uint64_t masks = 1ull << (n * (n - 1) / 2);
      for (std::uint64_t m = 0; m < masks; ++m) {
        const Graph g = from_mask(n, m, adj);
        wrong += arboricity(g) != arboricity_oracle(adj);
        ++checked;
      }
    }
    Rng rng = make_rng(RngSeed{2});
    for (int t = 0; t < 200000; ++t) {
      const Graph g = from_mask(8, rng() & ((1ull << 28) - 1), adj);
      wrong += arboricity(g) != arboricity_oracle(adj);
      ++checked;
    }
    o.require(wrong == 0, "arboricity " + std::to_string(wrong) + " mismatches over " + std::to_string(checked));
  }
  {
    std::size_t wrong = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
      const std::size_t n = 3 + s % 8;
      const Graph g = erdos_renyi(n, 0.1 + 0.1 * static_cast<double>(s % 9), RngSeed{s});
      std::size_t t = 0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          for (std::size_t c = b + 1; c < n; ++c) t += g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c);
      wrong += triangles_per_node(g) != 3.0 * static_cast<double>(t) / static_cast<double>(n);
    }
    o.require(wrong == 0, "triangles " + std::to_string(wrong) + " mismatches");
  }
  {
    const std::size_t want[] = {1, 2, 5, 15, 52, 203};
    bool ok = true;
    for (std::size_t l = 1; l <= 6; ++l) ok = ok && anonymous_patterns(l).size() == want[l - 1];
    o.require(ok, "pattern counts 1,2,5,15,52,203");
  }
  {
    std::size_t wrong = 0;
    std::vector<std::uint32_t> adj;
    std::vector<Graph> all;
    for (std::uint64_t m = 0; m < 64; ++m) all.push_back(from_mask(4, m, adj));
    std::vector<std::size_t> perm(4);
    for (const auto& a : all) {
      for (const auto& b : all) {
        bool brute = false;
        for (std::size_t i = 0; i < 4; ++i) perm[i] = i;
        do {
          bool same = true;
          for (std::size_t i = 0; i < 4 && same; ++i)
            for (std::size_t j = 0; j < 4 && same; ++j) same = a.has_edge(i, j) == b.has_edge(perm[i], perm[j]);
          brute = brute || same;
        } while (std::next_permutation(perm.begin(), perm.end()));
        wrong += is_isomorphic(a, b) != brute;
      }
    }
    o.require(wrong == 0, "isomorphism " + std::to_string(wrong) + " mismatches over 4096 pairs");
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  const double ratios[] = {0.0, 0.1, 0.3, 0.5};
  const int seeds = 10;
  std::vector<std::vector<double>> f1(4), auc(4);
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed{static_cast<std::uint64_t>(300 + s)};
    const GraphSet train = er_corpus(60, 12, 0.3, derive(seed, 1));
    const GraphSet gen = SurrogateModel::train(train, memorize(0.05), derive(seed, 2)).generate(200);
    for (std::size_t k = 0; k < 4; ++k) {
      DefenseConfig dc;
      dc.mode = DefenseMode::post;
      dc.ratio = ratios[k];
      const GraphSet defended = defend(gen, dc, derive(seed, 3));
      const auto rec = run_gra(defended, {}, derive(seed, 4));
      f1[k].push_back(evaluate_reconstruction(rec.reconstructed, train, {}, derive(seed, 5)).f1);
      MiaConfig c;
      c.query.generations = 20;
      auc[k].push_back(run_mia_experiment(train, MiaSetting::non_transfer, c,
                                          post_defended_factory(surrogate_factory(memorize(0.05)), dc), derive(seed, 6))
                           .auc);
    }
  }
  std::vector<Moments> mf, ma;
  for (std::size_t k = 0; k < 4; ++k) {
    mf.push_back(moments(f1[k]));
    ma.push_back(moments(auc[k]));
  }
  o.require(non_increasing_within_3se(mf), "GRA F1 " + series(mf));
  o.require(non_increasing_within_3se(ma), "MIA AUC " + series(ma));

  int kept = 0;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed{static_cast<std::uint64_t>(400 + s)};
    const GraphSet ref = two_class_corpus(60, derive(seed, 1));
    const GraphSet gen = SurrogateModel::train(ref, memorize(0.05), derive(seed, 2)).generate(100);
    bool ok = true;
    for (double r : {0.1, 0.3, 0.5}) {
      DefenseConfig sal;
      sal.mode = DefenseMode::post;
      sal.ratio = r;
      DefenseConfig rnd = sal;
      rnd.mode = DefenseMode::random_matched;
      const double us = utility_eval(defend(gen, sal, derive(seed, 3)), ref, derive(seed, 4));
      const double ur = utility_eval(defend(gen, rnd, derive(seed, 3)), ref, derive(seed, 4));
      ok = ok && us >= ur - 0.05;
    }
    kept += ok;
  }
  o.require(kept >= 7, "saliency utility >= random - 0.05 on " + std::to_string(kept) + "/10 seeds");
  const double drop = ma[0].mean - ma[1].mean;
  o.require(drop >= 0.1, fmt("MIA AUC drop at r=0.1 %.3f", drop));
  return o;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "graphleak_acceptance";
  fs::remove_all(root);
  Config cfg;
  for (const char* s : {"seed=5", "data.graphs=30", "data.n_min=12", "data.n_max=16", "data.density_min=0.25",
                        "data.density_max=0.45", "data.classes=2", "surrogate.generate=100", "mia.generations=10",
                        "awe.walks=300", "tradeoff.ratios=[0.0,0.1,0.3]", "tradeoff.probabilities=[0.1,0.3]"})
    cfg.set(s);
  for (std::size_t jobs : {1u, 8u}) {
    Config c = cfg;
    c.set_jobs(jobs);
    Workspace ws(c, root / ("jobs" + std::to_string(jobs)));
    full_pipeline(ws);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(root / "jobs1")) {
    ++files;
    const fs::path other = root / "jobs8" / e.path().filename();
    differing += !fs::exists(other) || read_all(e.path()) != read_all(other);
  }
  std::size_t other_files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "jobs8")) ++other_files;
  o.require(differing == 0 && files == other_files && files > 0,
            std::to_string(files) + " files, " + std::to_string(differing) + " differ");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  int failed = 0;
  std::vector<bool> selected(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %zu: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
