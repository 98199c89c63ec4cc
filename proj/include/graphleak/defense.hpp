#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "graphleak/awe.hpp"
#include "graphleak/common.hpp"
#include "graphleak/graph.hpp"
#include "graphleak/metrics.hpp"
#include "graphleak/mia.hpp"
#include "graphleak/parallel.hpp"

namespace graphleak {

// ---------------------------------------------------------------------------
// Two-layer GCN on a single graph

struct GcnParams {
  std::size_t hidden = 16;
  double rate = 0.01;
};

struct GcnModel {
  Eigen::MatrixXd w1;  // features x hidden
  Eigen::MatrixXd w2;  // hidden x classes

  static GcnModel init(std::size_t features, std::size_t hidden, std::size_t classes, RngSeed seed) {
    Rng rng = make_rng(seed);
    auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
      m.resize(rows, cols);
      const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * uniform01(rng) - 1.0) * a;
    };
    GcnModel m;
    fill(m.w1, static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(hidden));
    fill(m.w2, static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(classes));
    return m;
  }
};

// Node features and labels the GCN is trained against; defaults come from the
// graph (identity features, clipped-degree labels).
struct GcnData {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::size_t classes = 0;

  static GcnData from(const Graph& g) {
    GcnData d;
    d.x = default_features(g);
    d.y = default_labels(g);
    if (g.node_labels()) {
      d.classes = static_cast<std::size_t>(*std::max_element(d.y.begin(), d.y.end())) + 1;
    } else {
      d.classes = kMaxDefaultLabel + 1;
    }
    return d;
  }
};

struct GcnForward {
  Eigen::VectorXd s;      // D~^(-1/2)
  Eigen::MatrixXd a_hat;  // normalized adjacency with self loops
  Eigen::MatrixXd ax;     // A^ X
  Eigen::MatrixXd z1;     // A^ X W1
  Eigen::MatrixXd h1;     // relu(z1)
  Eigen::MatrixXd logits;
  Eigen::MatrixXd probs;
  double loss = 0.0;
};

inline GcnForward gcn_forward(const Eigen::MatrixXd& adjacency, const GcnData& data, const GcnModel& model) {
  const Eigen::Index n = adjacency.rows();
  GcnForward f;
  const Eigen::MatrixXd a_tilde = adjacency + Eigen::MatrixXd::Identity(n, n);
  f.s = a_tilde.rowwise().sum().array().rsqrt();
  f.a_hat = f.s.asDiagonal() * a_tilde * f.s.asDiagonal();
  f.ax = f.a_hat * data.x;
  f.z1 = f.ax * model.w1;
  f.h1 = f.z1.cwiseMax(0.0);
  f.logits = f.a_hat * (f.h1 * model.w2);
  f.probs.resize(n, f.logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = f.logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (f.logits.row(i).array() - mx).exp();
    const double z = e.sum();
    f.probs.row(i) = e / z;
    loss -= f.logits(i, data.y[static_cast<std::size_t>(i)]) - mx - std::log(z);
  }
  f.loss = loss / static_cast<double>(n);
  return f;
}

inline GcnForward gcn_forward(const Graph& g, const GcnModel& model) {
  return gcn_forward(g.adjacency_matrix(), GcnData::from(g), model);
}

namespace detail {

inline Eigen::MatrixXd logit_grad(const GcnForward& f, const GcnData& data) {
  Eigen::MatrixXd d = f.probs;
  for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, data.y[static_cast<std::size_t>(i)]) -= 1.0;
  return d / static_cast<double>(d.rows());
}

}  // namespace detail

struct GcnWeightGradient {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
};

inline GcnWeightGradient gcn_weight_gradient(const GcnForward& f, const GcnData& data, const GcnModel& model) {
  const Eigen::MatrixXd dlogits = detail::logit_grad(f, data);
  GcnWeightGradient g;
  g.w2 = (f.a_hat * f.h1).transpose() * dlogits;
  const Eigen::MatrixXd dh1 = f.a_hat.transpose() * dlogits * model.w2.transpose();
  const Eigen::MatrixXd dz1 = dh1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = f.ax.transpose() * dz1;
  return g;
}

inline void gcn_train(const Eigen::MatrixXd& adjacency, const GcnData& data, GcnModel& model, std::size_t epochs,
                      double rate) {
  for (std::size_t e = 0; e < epochs; ++e) {
    const GcnForward f = gcn_forward(adjacency, data, model);
    const GcnWeightGradient g = gcn_weight_gradient(f, data, model);
    model.w1 -= rate * g.w1;
    model.w2 -= rate * g.w2;
  }
}

// dL/dA through A~ = A + I and its degree normalization, symmetrized as
// (G + G^T)/2 with a zero diagonal.
inline Eigen::MatrixXd adjacency_gradient(const Eigen::MatrixXd& adjacency, const GcnData& data,
                                          const GcnModel& model) {
  const Eigen::Index n = adjacency.rows();
  const GcnForward f = gcn_forward(adjacency, data, model);
  const Eigen::MatrixXd dlogits = detail::logit_grad(f, data);
  const Eigen::MatrixXd dh1 = f.a_hat.transpose() * dlogits * model.w2.transpose();
  const Eigen::MatrixXd dz1 = dh1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  // dL/dA^ from both propagation steps.
  const Eigen::MatrixXd g_hat = dlogits * (f.h1 * model.w2).transpose() + dz1 * (data.x * model.w1).transpose();

  const Eigen::MatrixXd a_tilde = adjacency + Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd m = g_hat.cwiseProduct(a_tilde);
  const Eigen::VectorXd ms = m * f.s;
  const Eigen::VectorXd mts = m.transpose() * f.s;
  Eigen::MatrixXd g = f.s.asDiagonal() * g_hat * f.s.asDiagonal();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = -0.5 * f.s(k) * f.s(k) * f.s(k) * (ms(k) + mts(k));
    g.row(k).array() += t;
  }
  Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
  sym.diagonal().setZero();
  return sym;
}

inline Eigen::MatrixXd adjacency_gradient(const Graph& g, const GcnModel& model) {
  return adjacency_gradient(g.adjacency_matrix(), GcnData::from(g), model);
}

inline Eigen::MatrixXd saliency(const Eigen::MatrixXd& adjacency, const GcnData& data, const GcnModel& model) {
  return adjacency_gradient(adjacency, data, model).cwiseAbs();
}

inline Eigen::MatrixXd saliency(const Graph& g, const GcnModel& model) {
  return adjacency_gradient(g, model).cwiseAbs();
}

// ---------------------------------------------------------------------------
// Perturbation

enum class DefenseMode { pre, post, random_baseline, random_matched };

inline const char* to_string(DefenseMode m) {
  switch (m) {
    case DefenseMode::pre: return "pre";
    case DefenseMode::post: return "post";
    case DefenseMode::random_baseline: return "random_baseline";
    case DefenseMode::random_matched: return "random_matched";
  }
  return "unknown";
}

inline DefenseMode parse_defense_mode(const std::string& s) {
  for (DefenseMode m : {DefenseMode::pre, DefenseMode::post, DefenseMode::random_baseline, DefenseMode::random_matched}) {
    if (s == to_string(m)) return m;
  }
  throw InvalidArgument("unknown defense mode '" + s + "'");
}

struct DefenseConfig {
  DefenseMode mode = DefenseMode::post;
  // Saliency and matched-random budget: floor(ratio * |E|) flips per graph.
  double ratio = 0.1;
  // random_baseline: independent flip probability per node pair.
  double flip_probability = 0.1;
  std::size_t epochs_per_iter = 10;
  GcnParams gcn;
  // Re-initialize the GCN before every flip instead of carrying weights over.
  bool cold_start = false;

  void validate() const {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw InvalidArgument("defense ratio must be in [0, 1]");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
      throw InvalidArgument("defense flip probability must be in [0, 1]");
  }
};

struct Perturbation {
  Graph graph;
  std::vector<Edge> flipped;
  bool budget_exceeded = false;
};

inline std::size_t flip_budget(const Graph& g, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(g.edge_count()) + 1e-9));
}

// Saliency-guided flipping: each step trains the GCN, then flips the
// not-yet-flipped pair (i < j) of lowest saliency, ties to the
// lexicographically first pair.
inline Perturbation perturb_graph(const Graph& g, const DefenseConfig& cfg, RngSeed seed) {
  cfg.validate();
  const std::size_t n = g.n();
  const std::size_t pairs = n * (n - 1) / 2;
  std::size_t budget = flip_budget(g, cfg.ratio);
  Perturbation out{g, {}, false};
  if (budget > pairs) {
    budget = pairs;
    out.budget_exceeded = true;
  }
  if (budget == 0) return out;

  const GcnData data = GcnData::from(g);
  Eigen::MatrixXd a = g.adjacency_matrix();
  std::vector<std::uint8_t> used(n * n, 0);
  GcnModel model = GcnModel::init(data.x.cols(), cfg.gcn.hidden, data.classes, derive(seed, 0));
  for (std::size_t step = 0; step < budget; ++step) {
    if (cfg.cold_start && step > 0)
      model = GcnModel::init(data.x.cols(), cfg.gcn.hidden, data.classes, derive(seed, 0, step));
    gcn_train(a, data, model, cfg.epochs_per_iter, cfg.gcn.rate);
    const Eigen::MatrixXd s = saliency(a, data, model);
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (used[i * n + j]) continue;
        const double v = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    used[bi * n + bj] = 1;
    const double flipped = 1.0 - a(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj));
    a(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj)) = flipped;
    a(static_cast<Eigen::Index>(bj), static_cast<Eigen::Index>(bi)) = flipped;
    out.flipped.emplace_back(static_cast<Node>(bi), static_cast<Node>(bj));
  }
  out.graph = g.with_toggled(out.flipped);
  return out;
}

// Flips exactly floor(ratio * |E|) distinct pairs chosen uniformly.
inline Perturbation random_flip_budget(const Graph& g, double ratio, RngSeed seed) {
  const std::size_t n = g.n();
  std::vector<Edge> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(static_cast<Node>(i), static_cast<Node>(j));
  std::size_t budget = flip_budget(g, ratio);
  Perturbation out{g, {}, false};
  if (budget > all.size()) {
    budget = all.size();
    out.budget_exceeded = true;
  }
  Rng rng = make_rng(seed);
  for (std::size_t k = 0; k < budget; ++k) {
    std::swap(all[k], all[k + uniform_index(rng, all.size() - k)]);
    out.flipped.push_back(all[k]);
  }
  std::sort(out.flipped.begin(), out.flipped.end());
  out.graph = g.with_toggled(out.flipped);
  return out;
}

inline Graph perturb_one(const Graph& g, const DefenseConfig& cfg, RngSeed seed) {
  switch (cfg.mode) {
    case DefenseMode::random_baseline: return perturb_flip(g, cfg.flip_probability, seed);
    case DefenseMode::random_matched: return random_flip_budget(g, cfg.ratio, seed).graph;
    case DefenseMode::pre:
    case DefenseMode::post: return perturb_graph(g, cfg, seed).graph;
  }
  return g;
}

// Perturbs every graph of a set; graph i uses stream i of `seed`.
inline GraphSet defend(const GraphSet& gs, const DefenseConfig& cfg, RngSeed seed, const Executor& exec = Executor{}) {
  cfg.validate();
  auto out = exec.map<Graph>(gs.size(), [&](std::size_t i) { return perturb_one(gs[i], cfg, derive(seed, i)); });
  return GraphSet(std::move(out), gs.provenance);
}

// Generator whose outputs pass through post-processing flips.
inline ConditionedSampler defended_sampler(ConditionedSampler inner, const DefenseConfig& cfg, RngSeed seed) {
  return [inner = std::move(inner), cfg, seed](const Graph& g, std::size_t count, std::uint64_t stream) {
    return defend(inner(g, count, stream), cfg, derive(seed, stream), Executor{1});
  };
}

// Generator trained on perturbed members.
inline ModelFactory pre_defended_factory(ModelFactory inner, const DefenseConfig& cfg) {
  return [inner = std::move(inner), cfg](const GraphSet& members, RngSeed seed) {
    return inner(defend(members, cfg, derive(seed, 99), Executor{1}), seed);
  };
}

inline ModelFactory post_defended_factory(ModelFactory inner, const DefenseConfig& cfg) {
  return [inner = std::move(inner), cfg](const GraphSet& members, RngSeed seed) {
    return defended_sampler(inner(members, seed), cfg, derive(seed, 98));
  };
}

// ---------------------------------------------------------------------------
// Utility: downstream graph classification

struct SoftmaxParams {
  std::size_t epochs = 500;
  double rate = 0.5;
  double l2 = 1e-3;
};

// Multiclass logistic regression trained by full-batch descent.
class SoftmaxClassifier {
 public:
  static SoftmaxClassifier train(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes,
                                 const SoftmaxParams& params) {
    SoftmaxClassifier c;
    c.mean_ = x.colwise().mean();
    c.scale_ = Eigen::RowVectorXd::Ones(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - c.mean_(j)).square().mean();
      if (var > 1e-24) c.scale_(j) = 1.0 / std::sqrt(var);
    }
    const Eigen::MatrixXd xs = c.transform(x);
    const auto k = static_cast<Eigen::Index>(classes);
    c.w_ = Eigen::MatrixXd::Zero(x.cols(), k);
    c.b_ = Eigen::RowVectorXd::Zero(k);
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(x.rows(), k);
    for (Eigen::Index i = 0; i < x.rows(); ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (std::size_t e = 0; e < params.epochs; ++e) {
      const Eigen::MatrixXd d = (c.probs_scaled(xs) - onehot) * inv_n;
      c.w_ -= params.rate * (xs.transpose() * d + params.l2 * c.w_);
      c.b_ -= params.rate * d.colwise().sum();
    }
    return c;
  }

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const { return probs_scaled(transform(x)); }

 private:
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean_).array().rowwise() * scale_.array();
  }

  Eigen::MatrixXd probs_scaled(const Eigen::MatrixXd& xs) const {
    Eigen::MatrixXd z = (xs * w_).rowwise() + b_;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double mx = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - mx).exp();
      z.row(i) /= z.row(i).sum();
    }
    return z;
  }

  Eigen::RowVectorXd mean_, scale_;
  Eigen::MatrixXd w_;
  Eigen::RowVectorXd b_;
};

struct UtilityParams {
  AweParams awe;
  SoftmaxParams classifier;
  // Shuffle the labels the generated graphs inherit (control run).
  bool permute_labels = false;
};

// One-vs-rest AUC averaged over the classes that have both positives and
// negatives in the test labels.
inline double one_vs_rest_auc(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    ScoredLabels s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s.scores.push_back(probs(static_cast<Eigen::Index>(i), c));
      s.labels.push_back(labels[i] == c ? 1 : 0);
    }
    const auto pos = std::count(s.labels.begin(), s.labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) continue;
    sum += roc_auc(s);
    ++used;
  }
  if (used == 0) throw ValidationError("utility: test labels hold a single class");
  return sum / static_cast<double>(used);
}

// Graph classification utility of a generated set: generated graphs take the
// label of their nearest (AWE Euclidean) graph in one half of the labeled
// reference set, a classifier is trained on them, and scored by one-vs-rest
// AUC on the other half.
inline double utility_eval(const GraphSet& generated, const GraphSet& reference, RngSeed seed,
                           const UtilityParams& params = {}) {
  if (generated.empty()) throw InvalidArgument("utility_eval: generated set is empty");
  if (reference.size() < 4) throw InvalidArgument("utility_eval: at least 4 reference graphs are required");
  int max_label = -1;
  std::vector<int> ref_labels;
  for (const auto& g : reference) {
    if (!g.graph_label()) throw ValidationError("utility_eval: reference graph '" + g.id() + "' has no label");
    ref_labels.push_back(*g.graph_label());
    max_label = std::max(max_label, *g.graph_label());
  }
  if (std::all_of(ref_labels.begin(), ref_labels.end(), [&](int l) { return l == ref_labels[0]; }))
    throw ValidationError("utility_eval: reference graphs hold a single class");
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;

  auto embed = [&](const Graph& g) -> Eigen::RowVectorXd {
    const auto e = detail::embed_or_skip(g, params.awe, derive(seed, 1));
    const std::size_t dim = anonymous_patterns(params.awe.walk_length).size();
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dim));
    if (e)
      for (std::size_t i = 0; i < dim; ++i) v(static_cast<Eigen::Index>(i)) = e->dist[i];
    return v;
  };

  // Stratified halves of the reference set.
  std::vector<std::size_t> label_half, test_half;
  {
    Rng rng = make_rng(derive(seed, 2));
    for (std::size_t c = 0; c < classes; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < reference.size(); ++i)
        if (ref_labels[i] == static_cast<int>(c)) idx.push_back(i);
      shuffle(idx, rng);
      for (std::size_t k = 0; k < idx.size(); ++k) (k % 2 == 0 ? label_half : test_half).push_back(idx[k]);
    }
    std::sort(label_half.begin(), label_half.end());
    std::sort(test_half.begin(), test_half.end());
  }

  std::vector<Eigen::RowVectorXd> ref_emb;
  for (const auto& g : reference) ref_emb.push_back(embed(g));

  Eigen::MatrixXd x(static_cast<Eigen::Index>(generated.size()), ref_emb[0].size());
  std::vector<int> y(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = embed(generated[i]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r : label_half) {
      const double d = (ref_emb[r] - x.row(static_cast<Eigen::Index>(i))).squaredNorm();
      if (d < best) {
        best = d;
        y[i] = ref_labels[r];
      }
    }
  }
  if (params.permute_labels) {
    Rng rng = make_rng(derive(seed, 3));
    shuffle(y, rng);
  }
  const auto clf = SoftmaxClassifier::train(x, y, classes, params.classifier);

  Eigen::MatrixXd xt(static_cast<Eigen::Index>(test_half.size()), x.cols());
  std::vector<int> yt;
  for (std::size_t k = 0; k < test_half.size(); ++k) {
    xt.row(static_cast<Eigen::Index>(k)) = ref_emb[test_half[k]];
    yt.push_back(ref_labels[test_half[k]]);
  }
  return one_vs_rest_auc(clf.predict_proba(xt), yt);
}

}  // namespace graphleak
