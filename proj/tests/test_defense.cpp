#include <gtest/gtest.h>

#include <cmath>

#include "graphleak/defense.hpp"
#include "test_util.hpp"

using namespace graphleak;

namespace {

double loss_at(const Eigen::MatrixXd& a, const GcnData& d, const GcnModel& m) { return gcn_forward(a, d, m).loss; }

// Central difference of the loss along a symmetric perturbation of (i, j),
// halved so it matches one entry of the symmetrized gradient.
double fd_entry(const Eigen::MatrixXd& a, const GcnData& d, const GcnModel& m, Eigen::Index i, Eigen::Index j) {
  const double h = 1e-6;
  Eigen::MatrixXd p = a, q = a;
  p(i, j) += h;
  p(j, i) += h;
  q(i, j) -= h;
  q(j, i) -= h;
  return (loss_at(p, d, m) - loss_at(q, d, m)) / (2 * h) / 2;
}

struct Instance {
  Graph g;
  GcnData data;
  GcnModel model;
};

Instance instance(std::uint64_t s) {
  Instance in{erdos_renyi(6 + s % 7, 0.2 + 0.03 * static_cast<double>(s % 10), RngSeed{s}), {}, {}};
  in.data = GcnData::from(in.g);
  in.model = GcnModel::init(in.data.x.cols(), 8, in.data.classes, RngSeed{s + 1000});
  return in;
}

GraphSet two_class_corpus(std::size_t count, std::uint64_t seed) {
  std::vector<Graph> gs;
  for (std::size_t i = 0; i < count; ++i) {
    const int c = static_cast<int>(i % 2);
    gs.push_back(erdos_renyi(12, c ? 0.45 : 0.25, derive(RngSeed{seed}, i), "c" + std::to_string(i)).with_graph_label(c));
  }
  return GraphSet(std::move(gs), Provenance::train);
}

}  // namespace

TEST(Gcn, ZeroWeightsGiveUniformLoss) {
  const Graph g = erdos_renyi(8, 0.4, RngSeed{1});
  const GcnData d = GcnData::from(g);
  GcnModel m;
  m.w1 = Eigen::MatrixXd::Zero(d.x.cols(), 4);
  m.w2 = Eigen::MatrixXd::Zero(4, static_cast<Eigen::Index>(d.classes));
  EXPECT_NEAR(gcn_forward(g, m).loss, std::log(static_cast<double>(d.classes)), 1e-12);
}

TEST(Gcn, WeightGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = instance(s);
    const Eigen::MatrixXd a = in.g.adjacency_matrix();
    const auto grad = gcn_weight_gradient(gcn_forward(a, in.data, in.model), in.data, in.model);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < in.model.w2.size(); k += 3) {
      GcnModel p = in.model, q = in.model;
      p.w2(k) += h;
      q.w2(k) -= h;
      EXPECT_NEAR(grad.w2(k), (loss_at(a, in.data, p) - loss_at(a, in.data, q)) / (2 * h), 1e-6);
    }
    for (Eigen::Index k = 0; k < in.model.w1.size(); k += 5) {
      GcnModel p = in.model, q = in.model;
      p.w1(k) += h;
      q.w1(k) -= h;
      EXPECT_NEAR(grad.w1(k), (loss_at(a, in.data, p) - loss_at(a, in.data, q)) / (2 * h), 1e-6);
    }
  }
}

TEST(Gcn, AdjacencyGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Instance in = instance(s);
    const Eigen::MatrixXd a = in.g.adjacency_matrix();
    const Eigen::MatrixXd g = adjacency_gradient(a, in.data, in.model);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.cols(); ++j)
        EXPECT_NEAR(g(i, j), fd_entry(a, in.data, in.model, i, j), 1e-4) << "seed " << s << " (" << i << "," << j << ")";
  }
}

TEST(Gcn, GradientSymmetricWithZeroDiagonal) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Instance in = instance(s);
    const Eigen::MatrixXd g = adjacency_gradient(in.g, in.model);
    EXPECT_TRUE(g.isApprox(g.transpose()) || g.norm() == 0.0);
    EXPECT_EQ(g.diagonal().cwiseAbs().maxCoeff(), 0.0);
    const Eigen::MatrixXd sal = saliency(in.g, in.model);
    EXPECT_GE(sal.minCoeff(), 0.0);
  }
}

TEST(Gcn, TrainingLowersLoss) {
  const Instance in = instance(4);
  GcnModel m = in.model;
  const Eigen::MatrixXd a = in.g.adjacency_matrix();
  const double before = loss_at(a, in.data, m);
  gcn_train(a, in.data, m, 200, 0.1);
  EXPECT_LT(loss_at(a, in.data, m), before);
}

TEST(Defense, FirstFlipIsFiniteDifferenceArgmin) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = erdos_renyi(8, 0.5, RngSeed{s});
    DefenseConfig cfg;
    cfg.ratio = 0.1;
    const Perturbation p = perturb_graph(g, cfg, RngSeed{s});
    ASSERT_FALSE(p.flipped.empty());
    const GcnData data = GcnData::from(g);
    GcnModel m = GcnModel::init(data.x.cols(), cfg.gcn.hidden, data.classes, derive(RngSeed{s}, 0));
    const Eigen::MatrixXd a = g.adjacency_matrix();
    gcn_train(a, data, m, cfg.epochs_per_iter, cfg.gcn.rate);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.cols(); ++j) best = std::min(best, std::abs(fd_entry(a, data, m, i, j)));
    const auto [u, v] = p.flipped[0];
    EXPECT_LE(std::abs(fd_entry(a, data, m, u, v)), best + 1e-6) << s;
  }
}

TEST(Defense, BudgetAndIdentity) {
  const Graph g = erdos_renyi(15, 0.3, RngSeed{2});
  DefenseConfig cfg;
  cfg.ratio = 0.0;
  EXPECT_TRUE(perturb_graph(g, cfg, RngSeed{1}).graph.same_structure(g));
  cfg.ratio = 0.3;
  const Perturbation p = perturb_graph(g, cfg, RngSeed{1});
  const std::size_t want = static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(g.edge_count())));
  EXPECT_EQ(p.flipped.size(), want);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = i + 1; j < g.n(); ++j) differing += g.has_edge(i, j) != p.graph.has_edge(i, j);
  EXPECT_EQ(differing, want);
  EXPECT_EQ(flip_budget(Graph::from_edges("t", 3, {{0, 1}, {1, 2}, {0, 2}}), 0.34), 1u);
}

TEST(Defense, DeterministicAndParallelSafe) {
  const GraphSet gs = testutil::er_set(6, 10, 0.3, 5);
  DefenseConfig cfg;
  cfg.ratio = 0.3;
  const GraphSet a = defend(gs, cfg, RngSeed{3}, Executor{1});
  const GraphSet b = defend(gs, cfg, RngSeed{3}, Executor{4});
  EXPECT_EQ(a.graphs, b.graphs);
}

TEST(Defense, RandomModes) {
  const Graph g = erdos_renyi(10, 0.3, RngSeed{7});
  DefenseConfig cfg;
  cfg.mode = DefenseMode::random_baseline;
  cfg.flip_probability = 1.0;
  const Graph c = perturb_one(g, cfg, RngSeed{1});
  EXPECT_EQ(c.edge_count(), 45u - g.edge_count());
  for (auto [u, v] : g.edges()) EXPECT_FALSE(c.has_edge(u, v));
  cfg.flip_probability = 0.0;
  EXPECT_TRUE(perturb_one(g, cfg, RngSeed{1}).same_structure(g));

  const Perturbation m = random_flip_budget(g, 0.5, RngSeed{2});
  EXPECT_EQ(m.flipped.size(), flip_budget(g, 0.5));
  EXPECT_TRUE(std::is_sorted(m.flipped.begin(), m.flipped.end()));
  EXPECT_EQ(std::adjacent_find(m.flipped.begin(), m.flipped.end()), m.flipped.end());
}

TEST(Defense, ConfigValidation) {
  DefenseConfig cfg;
  cfg.ratio = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.ratio = 0.1;
  cfg.flip_probability = -0.1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_EQ(parse_defense_mode("random_matched"), DefenseMode::random_matched);
  EXPECT_STREQ(to_string(parse_defense_mode("pre")), "pre");
  EXPECT_THROW(parse_defense_mode("sideways"), InvalidArgument);
}

TEST(Utility, ReferenceAgainstItselfSeparatesClasses) {
  const GraphSet ref = two_class_corpus(40, 1);
  EXPECT_GE(utility_eval(ref, ref, RngSeed{2}), 0.9);
}

TEST(Utility, PermutedLabelsNearChance) {
  const GraphSet ref = two_class_corpus(40, 3);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) sum += utility_eval(ref, ref, RngSeed{s}, {{}, {}, true});
  EXPECT_NEAR(sum / 10, 0.5, 0.15);
}

TEST(Utility, Rejects) {
  const GraphSet ref = two_class_corpus(10, 4);
  EXPECT_THROW(utility_eval(GraphSet{}, ref, RngSeed{1}), InvalidArgument);
  EXPECT_THROW(utility_eval(ref, testutil::er_set(10, 8, 0.3, 1), RngSeed{1}), ValidationError);
  std::vector<Graph> one;
  for (int i = 0; i < 6; ++i) one.push_back(erdos_renyi(8, 0.3, RngSeed{static_cast<std::uint64_t>(i)}, "o" + std::to_string(i)).with_graph_label(0));
  EXPECT_THROW(utility_eval(ref, GraphSet(one, Provenance::train), RngSeed{1}), ValidationError);
  EXPECT_THROW(utility_eval(ref, GraphSet(std::vector<Graph>(ref.graphs.begin(), ref.graphs.begin() + 3), Provenance::train), RngSeed{1}), InvalidArgument);
}

TEST(OneVsRest, MatchesBinaryAuc) {
  Eigen::MatrixXd p(4, 2);
  p << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7;
  EXPECT_DOUBLE_EQ(one_vs_rest_auc(p, {0, 1, 0, 1}), 1.0);
  EXPECT_THROW(one_vs_rest_auc(p, {1, 1, 1, 1}), ValidationError);
}
