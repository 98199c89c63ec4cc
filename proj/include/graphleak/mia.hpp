#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphleak/awe.hpp"
#include "graphleak/common.hpp"
#include "graphleak/graph.hpp"
#include "graphleak/io.hpp"
#include "graphleak/metrics.hpp"
#include "graphleak/parallel.hpp"
#include "graphleak/surrogate.hpp"

namespace graphleak {

enum class FeatureVariant { v1, v2 };

inline const char* to_string(FeatureVariant v) { return v == FeatureVariant::v1 ? "v1" : "v2"; }

inline FeatureVariant parse_feature_variant(const std::string& s) {
  if (s == "v1") return FeatureVariant::v1;
  if (s == "v2") return FeatureVariant::v2;
  throw InvalidArgument("unknown feature variant '" + s + "'");
}

struct AweParams {
  std::size_t walk_length = kDefaultWalkLength;
  std::size_t walks = kDefaultWalkCount;
};

// R x 4 similarity rows with columns (dot, cosine, expdiff, jsd).
struct AttackFeature {
  Eigen::MatrixXd matrix;
  FeatureVariant variant = FeatureVariant::v2;
  std::size_t imputed_rows = 0;
};

inline constexpr std::size_t kFeatureColumns = 4;

namespace detail {

// Embedding seeds depend on graph content, so a feature does not depend on the
// order in which the generated graphs arrive.
inline std::optional<AweVector> embed_or_skip(const Graph& g, const AweParams& awe, RngSeed seed) {
  if (g.edge_count() == 0) return std::nullopt;
  const auto& a = g.adjacency();
  const std::uint64_t key = fnv1a(std::string_view(reinterpret_cast<const char*>(a.data()), a.size()), g.n());
  return awe_embedding(g, awe.walk_length, awe.walks, derive(seed, key));
}

inline void sim_row(const AweVector& a, const AweVector& b, Eigen::MatrixXd& m, Eigen::Index r) {
  for (std::size_t c = 0; c < kFeatureColumns; ++c) m(r, static_cast<Eigen::Index>(c)) = sim(kAllSimilarities[c], a, b).value;
}

// Undefined rows take the column means of the defined ones (zeros if none).
inline void impute(Eigen::MatrixXd& m, const std::vector<bool>& defined) {
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m.cols());
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (defined[static_cast<std::size_t>(r)]) {
      mean += m.row(r);
      ++count;
    }
  }
  if (count > 0) mean /= static_cast<double>(count);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!defined[static_cast<std::size_t>(r)]) m.row(r) = mean;
  }
}

}  // namespace detail

// Sorts rows by cosine descending, then expdiff ascending, then the remaining
// columns, so equal row multisets give equal matrices.
inline void canonicalize_rows(Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (m(a, 1) != m(b, 1)) return m(a, 1) > m(b, 1);
    if (m(a, 2) != m(b, 2)) return m(a, 2) < m(b, 2);
    if (m(a, 0) != m(b, 0)) return m(a, 0) > m(b, 0);
    return m(a, 3) < m(b, 3);
  });
  Eigen::MatrixXd sorted(m.rows(), m.cols());
  for (std::size_t r = 0; r < order.size(); ++r) sorted.row(static_cast<Eigen::Index>(r)) = m.row(order[r]);
  m = std::move(sorted);
}

inline AttackFeature build_feature_v1(const Graph& shadow_g, const GraphSet& generated, const AweParams& awe,
                                      RngSeed seed) {
  if (generated.empty()) throw InvalidArgument("build_feature_v1: generated set is empty");
  const auto target = detail::embed_or_skip(shadow_g, awe, seed);
  AttackFeature f;
  f.variant = FeatureVariant::v1;
  f.matrix.resize(static_cast<Eigen::Index>(generated.size()), kFeatureColumns);
  std::vector<bool> defined(generated.size(), false);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto e = detail::embed_or_skip(generated[i], awe, seed);
    if (target && e) {
      detail::sim_row(*e, *target, f.matrix, static_cast<Eigen::Index>(i));
      defined[i] = true;
    } else {
      ++f.imputed_rows;
    }
  }
  detail::impute(f.matrix, defined);
  canonicalize_rows(f.matrix);
  return f;
}

inline AttackFeature build_feature_v2(const GraphSet& generated, const AweParams& awe, RngSeed seed) {
  if (generated.size() < 2) throw InvalidArgument("build_feature_v2: at least two generated graphs are required");
  const std::size_t n = generated.size();
  std::vector<std::optional<AweVector>> emb(n);
  for (std::size_t i = 0; i < n; ++i) emb[i] = detail::embed_or_skip(generated[i], awe, seed);
  AttackFeature f;
  f.variant = FeatureVariant::v2;
  f.matrix.resize(static_cast<Eigen::Index>(n * (n - 1) / 2), kFeatureColumns);
  std::vector<bool> defined(static_cast<std::size_t>(f.matrix.rows()), false);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++r) {
      if (emb[i] && emb[j]) {
        detail::sim_row(*emb[i], *emb[j], f.matrix, r);
        defined[static_cast<std::size_t>(r)] = true;
      } else {
        ++f.imputed_rows;
      }
    }
  }
  detail::impute(f.matrix, defined);
  canonicalize_rows(f.matrix);
  return f;
}

inline Eigen::VectorXd flatten(const AttackFeature& f) {
  Eigen::VectorXd v(f.matrix.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < f.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.matrix.cols(); ++c) v(k++) = f.matrix(r, c);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Attack classifier

enum class ClassifierKind { mlp, logistic };

inline const char* to_string(ClassifierKind k) { return k == ClassifierKind::mlp ? "mlp" : "logistic"; }

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "mlp") return ClassifierKind::mlp;
  if (s == "logistic") return ClassifierKind::logistic;
  throw InvalidArgument("unknown classifier '" + s + "'");
}

struct ClassifierParams {
  ClassifierKind kind = ClassifierKind::mlp;
  std::size_t hidden = 64;
  std::size_t epochs = 300;
  double rate = 0.01;
  // Z-score each input column with training statistics.
  bool standardize = true;
};

// One ReLU hidden layer and a sigmoid output; with no hidden layer the output
// is affine in the input (logistic regression).
struct Network {
  Eigen::MatrixXd w1;  // hidden x inputs
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // hidden, or inputs when there is no hidden layer
  double b2 = 0.0;

  bool has_hidden() const { return w1.size() > 0; }

  static Network init(ClassifierKind kind, std::size_t inputs, std::size_t hidden, RngSeed seed) {
    Rng rng = make_rng(seed);
    auto glorot = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      return (2.0 * uniform01(rng) - 1.0) * a;
    };
    Network n;
    const auto d = static_cast<Eigen::Index>(inputs);
    if (kind == ClassifierKind::mlp) {
      const auto h = static_cast<Eigen::Index>(hidden);
      n.w1.resize(h, d);
      for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < d; ++j) n.w1(i, j) = glorot(d, h);
      n.b1 = Eigen::VectorXd::Zero(h);
      n.w2.resize(h);
      for (Eigen::Index i = 0; i < h; ++i) n.w2(i) = glorot(h, 1);
    } else {
      n.w2 = Eigen::VectorXd::Zero(d);
    }
    return n;
  }

  // Pre-sigmoid scores for the rows of x.
  Eigen::VectorXd logits(const Eigen::MatrixXd& x) const {
    if (!has_hidden()) return (x * w2).array() + b2;
    Eigen::MatrixXd h = ((x * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
    return (h * w2).array() + b2;
  }
};

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Mean binary cross-entropy.
inline double network_loss(const Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd z = net.logits(x);
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y(i) * z(i);
  return s / static_cast<double>(z.size());
}

inline Network network_gradient(const Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Network g;
  if (!net.has_hidden()) {
    const Eigen::VectorXd z = (x * net.w2).array() + net.b2;
    Eigen::VectorXd dz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) dz(i) = (sigmoid(z(i)) - y(i)) * inv_n;
    g.w2 = x.transpose() * dz;
    g.b2 = dz.sum();
    return g;
  }
  const Eigen::MatrixXd pre = (x * net.w1.transpose()).rowwise() + net.b1.transpose();
  const Eigen::MatrixXd h = pre.cwiseMax(0.0);
  const Eigen::VectorXd z = (h * net.w2).array() + net.b2;
  Eigen::VectorXd dz(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) dz(i) = (sigmoid(z(i)) - y(i)) * inv_n;
  g.w2 = h.transpose() * dz;
  g.b2 = dz.sum();
  Eigen::MatrixXd dpre = dz * net.w2.transpose();
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  g.w1 = dpre.transpose() * x;
  g.b1 = dpre.colwise().sum().transpose();
  return g;
}

class AttackClassifier {
 public:
  AttackClassifier() = default;

  static AttackClassifier train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ClassifierParams& params,
                                RngSeed seed) {
    if (x.rows() == 0 || x.rows() != y.size()) throw InvalidArgument("train_attack: empty or mismatched input");
    AttackClassifier c;
    c.params_ = params;
    c.mean_ = Eigen::RowVectorXd::Zero(x.cols());
    c.scale_ = Eigen::RowVectorXd::Ones(x.cols());
    if (params.standardize) {
      c.mean_ = x.colwise().mean();
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - c.mean_(j)).square().mean();
        c.scale_(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
      }
    }
    const Eigen::MatrixXd xs = c.transform(x);
    c.net_ = Network::init(params.kind, static_cast<std::size_t>(x.cols()), params.hidden, seed);
    for (std::size_t e = 0; e < params.epochs; ++e) {
      const Network g = network_gradient(c.net_, xs, y);
      if (c.net_.has_hidden()) {
        c.net_.w1 -= params.rate * g.w1;
        c.net_.b1 -= params.rate * g.b1;
      }
      c.net_.w2 -= params.rate * g.w2;
      c.net_.b2 -= params.rate * g.b2;
    }
    return c;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd z = net_.logits(transform(x));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
    return z;
  }

  double predict(const Eigen::VectorXd& x) const { return predict(Eigen::MatrixXd(x.transpose()))(0); }

  std::size_t inputs() const { return static_cast<std::size_t>(mean_.size()); }
  const ClassifierParams& params() const { return params_; }
  const Network& network() const { return net_; }

 private:
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean_.size())
      throw InvalidArgument("classifier expects " + std::to_string(mean_.size()) + " inputs, got " +
                            std::to_string(x.cols()));
    return (x.rowwise() - mean_).array().rowwise() * scale_.array();
  }

  ClassifierParams params_;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
  Network net_;
};

struct LabeledFeature {
  AttackFeature feature;
  int label = 0;
};

inline AttackClassifier train_attack(std::span<const LabeledFeature> data, const ClassifierParams& params,
                                     RngSeed seed) {
  if (data.empty()) throw InvalidArgument("train_attack: no training features");
  std::size_t pos = 0;
  for (const auto& d : data) {
    if (d.label != 0 && d.label != 1) throw InvalidArgument("train_attack: labels must be 0 or 1");
    if (d.feature.variant != data[0].feature.variant) throw InvalidArgument("train_attack: mixed feature variants");
    if (d.feature.matrix.rows() != data[0].feature.matrix.rows())
      throw InvalidArgument("train_attack: features differ in row count");
    pos += static_cast<std::size_t>(d.label);
  }
  if (2 * pos != data.size())
    throw InvalidArgument("train_attack: unbalanced labels (" + std::to_string(pos) + " members of " +
                          std::to_string(data.size()) + ")");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), data[0].feature.matrix.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = flatten(data[i].feature).transpose();
    y(static_cast<Eigen::Index>(i)) = data[i].label;
  }
  return AttackClassifier::train(x, y, params, seed);
}

// ---------------------------------------------------------------------------
// Inference against a black-box generator

// Conditioned generation oracle: (input graph, count, stream) -> outputs.
using ConditionedSampler = std::function<GraphSet(const Graph&, std::size_t, std::uint64_t)>;

// Builds a generator trained on the given members.
using ModelFactory = std::function<ConditionedSampler(const GraphSet&, RngSeed)>;

inline ModelFactory surrogate_factory(const SurrogateModel::Options& options) {
  return [options](const GraphSet& members, RngSeed seed) -> ConditionedSampler {
    auto model = std::make_shared<const SurrogateModel>(SurrogateModel::train(members, options, seed));
    return [model](const Graph& g, std::size_t count, std::uint64_t stream) {
      return model->generate_conditioned(g, count, stream);
    };
  };
}

struct QueryParams {
  FeatureVariant variant = FeatureVariant::v2;
  std::size_t generations = 100;
  AweParams awe;
};

inline AttackFeature query_feature(const ConditionedSampler& model, const Graph& g, const QueryParams& q,
                                   std::uint64_t stream, RngSeed seed) {
  const GraphSet out = model(g, q.generations, stream);
  return q.variant == FeatureVariant::v1 ? build_feature_v1(g, out, q.awe, seed) : build_feature_v2(out, q.awe, seed);
}

struct MembershipVerdict {
  double probability = 0.0;
  int label = 0;
};

// Member iff the probability is strictly above one half.
inline MembershipVerdict verdict(double probability) { return {probability, probability > 0.5 ? 1 : 0}; }

inline MembershipVerdict infer_membership(const AttackClassifier& clf, const Graph& target,
                                          const ConditionedSampler& model, const QueryParams& q,
                                          std::uint64_t stream, RngSeed seed) {
  const AttackFeature f = query_feature(model, target, q, stream, seed);
  if (static_cast<std::size_t>(f.matrix.size()) != clf.inputs())
    throw InvalidArgument("infer_membership: feature shape does not match the classifier");
  return verdict(clf.predict(flatten(f)));
}

// ---------------------------------------------------------------------------
// Experiment

enum class MiaSetting { non_transfer, transfer };

inline const char* to_string(MiaSetting s) { return s == MiaSetting::non_transfer ? "non_transfer" : "transfer"; }

inline MiaSetting parse_mia_setting(const std::string& s) {
  if (s == "non_transfer") return MiaSetting::non_transfer;
  if (s == "transfer") return MiaSetting::transfer;
  throw InvalidArgument("unknown MIA setting '" + s + "'");
}

struct MiaConfig {
  QueryParams query;
  ClassifierParams classifier;
  double fpr = 0.1;
  // Shuffle the membership labels of both the attack-training and the test
  // pool (control run).
  bool permute_labels = false;
};

struct MiaReport {
  double accuracy = 0.0;
  double auc = 0.0;
  double tpr_at_fpr = 0.0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t imputed_rows = 0;
  ScoredLabels scored;
};

inline Report to_report(const MiaReport& r, double fpr) {
  Report out;
  out["accuracy"] = r.accuracy;
  out["auc"] = r.auc;
  out["tpr_at_fpr"] = r.tpr_at_fpr;
  out["fpr"] = fpr;
  out["train_samples"] = static_cast<double>(r.train_samples);
  out["test_samples"] = static_cast<double>(r.test_samples);
  out["imputed_rows"] = static_cast<double>(r.imputed_rows);
  return out;
}

// Balanced member/non-member query pool around one generator.
struct QueryPool {
  GraphSet members;
  GraphSet nonmembers;
};

// Shuffles `gs` and splits it into halves of equal size (odd leftovers dropped).
inline std::pair<GraphSet, GraphSet> split_halves(const GraphSet& gs, RngSeed seed) {
  std::vector<std::size_t> idx(gs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  shuffle(idx, rng);
  const std::size_t half = gs.size() / 2;
  std::vector<Graph> a, b;
  for (std::size_t i = 0; i < half; ++i) a.push_back(gs[idx[i]]);
  for (std::size_t i = half; i < 2 * half; ++i) b.push_back(gs[idx[i]]);
  return {GraphSet(std::move(a), gs.provenance), GraphSet(std::move(b), gs.provenance)};
}

namespace detail {

struct Queried {
  std::vector<LabeledFeature> features;
  std::size_t imputed = 0;
};

// Features for every pool graph, computed in parallel; graph q's generator
// stream and embedding seed depend only on q's position.
inline Queried query_pool(const ConditionedSampler& model, const QueryPool& pool, const QueryParams& q,
                          RngSeed seed, const Executor& exec) {
  const std::size_t nm = pool.members.size();
  const std::size_t total = nm + pool.nonmembers.size();
  auto feats = exec.map<AttackFeature>(total, [&](std::size_t k) {
    const Graph& g = k < nm ? pool.members[k] : pool.nonmembers[k - nm];
    return query_feature(model, g, q, k, derive(seed, k));
  });
  Queried out;
  for (std::size_t k = 0; k < total; ++k) {
    out.imputed += feats[k].imputed_rows;
    out.features.push_back({std::move(feats[k]), k < nm ? 1 : 0});
  }
  return out;
}

}  // namespace detail

// Trains on features queried from a shadow generator and scores a test pool
// queried from the target generator.
inline MiaReport run_mia(const ConditionedSampler& shadow, const QueryPool& shadow_pool,
                         const ConditionedSampler& target, const QueryPool& test_pool, const MiaConfig& config,
                         RngSeed seed, const Executor& exec = Executor{}) {
  if (shadow_pool.members.size() != shadow_pool.nonmembers.size() || shadow_pool.members.empty())
    throw InvalidArgument("run_mia: the shadow pool must hold equal, non-zero member and non-member counts");
  if (test_pool.members.empty() || test_pool.nonmembers.empty())
    throw InvalidArgument("run_mia: the test pool needs both members and non-members");
  auto train = detail::query_pool(shadow, shadow_pool, config.query, derive(seed, 1), exec);
  auto test = detail::query_pool(target, test_pool, config.query, derive(seed, 2), exec);
  if (config.permute_labels) {
    auto permute = [](std::vector<LabeledFeature>& fs, RngSeed s) {
      std::vector<int> labels;
      for (const auto& f : fs) labels.push_back(f.label);
      Rng rng = make_rng(s);
      shuffle(labels, rng);
      for (std::size_t i = 0; i < labels.size(); ++i) fs[i].label = labels[i];
    };
    permute(train.features, derive(seed, 3));
    permute(test.features, derive(seed, 5));
  }
  const AttackClassifier clf = train_attack(train.features, config.classifier, derive(seed, 4));

  MiaReport r;
  r.train_samples = train.features.size();
  r.test_samples = test.features.size();
  r.imputed_rows = train.imputed + test.imputed;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(test.features.size()), static_cast<Eigen::Index>(clf.inputs()));
  for (std::size_t i = 0; i < test.features.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = flatten(test.features[i].feature).transpose();
  const Eigen::VectorXd p = clf.predict(x);
  std::vector<int> predicted;
  for (std::size_t i = 0; i < test.features.size(); ++i) {
    const auto v = verdict(p(static_cast<Eigen::Index>(i)));
    r.scored.scores.push_back(v.probability);
    r.scored.labels.push_back(test.features[i].label);
    predicted.push_back(v.label);
  }
  r.accuracy = accuracy(predicted, r.scored.labels);
  r.auc = roc_auc(r.scored);
  r.tpr_at_fpr = tpr_at_fpr(r.scored, config.fpr);
  return r;
}

// Full membership inference experiment.
// non_transfer: the dataset is halved into target members and non-members;
// each half is halved again into an attack-training part and a test part. The
// shadow generator is trained on the attack-training members, the target
// generator on all members.
// transfer: the shadow side uses `dataset` halved into shadow members and
// non-members; the test pool is `target_dataset` halved into target members
// (which train the target generator) and non-members.
inline MiaReport run_mia_experiment(const GraphSet& dataset, MiaSetting setting, const MiaConfig& config,
                                    const ModelFactory& factory, RngSeed seed,
                                    const GraphSet* target_dataset = nullptr, const Executor& exec = Executor{}) {
  if (setting == MiaSetting::non_transfer) {
    if (dataset.size() < 4) throw InvalidArgument("run_mia_experiment: at least 4 graphs are required");
    auto [members, nonmembers] = split_halves(dataset, derive(seed, 10));
    auto [m_train, m_test] = split_halves(members, derive(seed, 11));
    auto [u_train, u_test] = split_halves(nonmembers, derive(seed, 12));
    const ConditionedSampler shadow = factory(m_train, derive(seed, 13));
    const ConditionedSampler target = factory(members, derive(seed, 14));
    return run_mia(shadow, {m_train, u_train}, target, {m_test, u_test}, config, derive(seed, 15), exec);
  }
  if (!target_dataset) throw InvalidArgument("run_mia_experiment: the transfer setting needs a target dataset");
  if (dataset.size() < 2 || target_dataset->size() < 2)
    throw InvalidArgument("run_mia_experiment: at least 2 graphs per dataset are required");
  auto [s_members, s_nonmembers] = split_halves(dataset, derive(seed, 20));
  auto [t_members, t_nonmembers] = split_halves(*target_dataset, derive(seed, 21));
  const ConditionedSampler shadow = factory(s_members, derive(seed, 22));
  const ConditionedSampler target = factory(t_members, derive(seed, 23));
  return run_mia(shadow, {s_members, s_nonmembers}, target, {t_members, t_nonmembers}, config, derive(seed, 24),
                 exec);
}

}  // namespace graphleak
