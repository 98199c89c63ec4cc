#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "graphleak/regal.hpp"

using namespace graphleak;

namespace {

JointEmbedding embed_pair(const Graph& a, const Graph& b, const RegalParams& p, std::uint64_t seed = 1) {
  const std::vector<Graph> gs{a, b};
  return joint_embed(gs, p, RngSeed{seed});
}

double optimal_mean_diff(const Eigen::MatrixXd& yi, const Eigen::MatrixXd& yj) {
  std::vector<int> perm(static_cast<std::size_t>(yj.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index u = 0; u < yi.rows(); ++u) total += diff(yi.row(u), yj.row(perm[static_cast<std::size_t>(u)]));
    best = std::min(best, total / static_cast<double>(yi.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void expect_injective(const std::vector<int>& m) {
  std::set<int> seen;
  for (int v : m)
    if (v != kUnmatched) EXPECT_TRUE(seen.insert(v).second);
}

}  // namespace

TEST(Identities, IsolatedNodeIsZero) {
  const Graph g = Graph::from_edges("g", 3, {{0, 1}});
  const auto ids = extract_identities(g, 2, 0.5);
  for (double x : ids[2].structure) EXPECT_EQ(x, 0.0);
}

TEST(Identities, StarCenter) {
  const Graph s4 = Graph::from_edges("s", 5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const auto ids = extract_identities(s4, 1, 0.5);
  ASSERT_EQ(ids[0].structure.size(), degree_bin_count(4));
  EXPECT_EQ(ids[0].structure[degree_bin(1)], 4.0);
  EXPECT_EQ(std::accumulate(ids[0].structure.begin(), ids[0].structure.end(), 0.0), 4.0);
}

TEST(Identities, SecondHopWeightedByDelta) {
  const Graph p3 = Graph::from_edges("p", 3, {{0, 1}, {1, 2}});
  const auto ids = extract_identities(p3, 2, 0.5, 3);
  // Node 0: hop 1 sees degree 2 (bin 1); hop 2 sees degree 1 (bin 0) scaled by 0.5.
  EXPECT_EQ(ids[0].structure, (std::vector<double>{0, 1, 0, 0.5, 0, 0}));
}

TEST(Identities, IsomorphicGraphsShareMultiset) {
  const Graph g = erdos_renyi(14, 0.3, RngSeed{2});
  const Graph h = permute_nodes(g, random_permutation(14, RngSeed{3}));
  auto a = extract_identities(g, 2, 0.5);
  auto b = extract_identities(h, 2, 0.5);
  std::vector<std::vector<double>> sa, sb;
  for (auto& x : a) sa.push_back(x.structure);
  for (auto& x : b) sb.push_back(x.structure);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  EXPECT_EQ(sa, sb);
}

TEST(Identities, RejectsBadArguments) {
  const Graph g("g", 2);
  EXPECT_THROW(extract_identities(g, 0, 0.5), InvalidArgument);
  EXPECT_THROW(extract_identities(g, 1, 0.0), InvalidArgument);
  EXPECT_THROW(extract_identities(g, 1, 1.5), InvalidArgument);
}

TEST(JointEmbed, DuplicateGraphsGiveEqualRows) {
  const Graph g = erdos_renyi(12, 0.3, RngSeed{4});
  const auto emb = embed_pair(g, g.with_id("copy"), RegalParams{});
  ASSERT_EQ(emb.rows.size(), 2u);
  EXPECT_LE((emb.rows[0] - emb.rows[1]).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(emb.rows[0].allFinite());
}

TEST(JointEmbed, SymmetricNodesShareRows) {
  RegalParams p;
  p.default_attributes = false;
  const Graph k4 = erdos_renyi(4, 1.0, RngSeed{0});
  const std::vector<Graph> gs{k4};
  const auto emb = joint_embed(gs, p, RngSeed{1});
  for (Eigen::Index r = 1; r < 4; ++r) EXPECT_LE((emb.rows[0].row(0) - emb.rows[0].row(r)).norm(), 1e-9);
}

TEST(JointEmbed, OversizedDimensionShrinks) {
  RegalParams p;
  p.default_attributes = false;
  p.dim = 64;
  const Graph k4 = erdos_renyi(4, 1.0, RngSeed{0});
  const std::vector<Graph> gs{k4, k4.with_id("b")};
  const auto emb = joint_embed(gs, p, RngSeed{1});
  EXPECT_TRUE(emb.shrunk);
  EXPECT_LT(emb.dim, 64u);
  EXPECT_EQ(static_cast<std::size_t>(emb.rows[0].cols()), emb.dim);
}

TEST(Diff, KnownValues) {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 0, 0;
  b << 1, 0;
  c << std::sqrt(60.0), 0;
  EXPECT_DOUBLE_EQ(diff(a, a), 1.0);
  EXPECT_NEAR(diff(a, b), std::exp(1.0), 1e-12);
  EXPECT_DOUBLE_EQ(diff(a, c), std::exp(50.0));
  EXPECT_DOUBLE_EQ(diff(a, b), diff(b, a));
  Eigen::VectorXd d(3);
  EXPECT_THROW(diff(a, d), InvalidArgument);
}

TEST(Align, SelfAlignmentIsIdentity) {
  const Graph g = erdos_renyi(15, 0.3, RngSeed{5});
  const auto emb = embed_pair(g, g.with_id("b"), RegalParams{});
  const auto r = align_pair(emb.rows[0], emb.rows[1], 5);
  for (std::size_t u = 0; u < g.n(); ++u) EXPECT_EQ(r.mapping[u], static_cast<int>(u));
  EXPECT_NEAR(r.mean_diff, 1.0, 1e-9);
}

TEST(Align, TriangleVersusTriangle) {
  RegalParams p;
  p.default_attributes = false;
  const Graph k3 = erdos_renyi(3, 1.0, RngSeed{0});
  const auto emb = embed_pair(k3, k3.with_id("b"), p);
  const auto r = align_pair(emb.rows[0], emb.rows[1], 5);
  expect_injective(r.mapping);
  EXPECT_NEAR(r.mean_diff, 1.0, 1e-6);
}

TEST(Align, IsomorphicGraphsWithoutAttributes) {
  RegalParams p;
  p.default_attributes = false;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = erdos_renyi(12, 0.35, RngSeed{s});
    const Graph h = permute_nodes(g, random_permutation(12, RngSeed{s + 1})).with_id("h");
    const auto emb = embed_pair(g, h, p, s);
    const auto r = align_pair(emb.rows[0], emb.rows[1], 5);
    expect_injective(r.mapping);
    EXPECT_NEAR(r.mean_diff, 1.0, 1e-6) << s;
  }
}

TEST(Align, MeanIsAverageAndAtLeastOne) {
  const auto emb = embed_pair(erdos_renyi(10, 0.3, RngSeed{1}), erdos_renyi(13, 0.3, RngSeed{2}, "b"), RegalParams{});
  const auto r = align_pair(emb.rows[0], emb.rows[1], 3);
  expect_injective(r.mapping);
  EXPECT_NEAR(r.mean_diff, std::accumulate(r.per_node_diff.begin(), r.per_node_diff.end(), 0.0) / 10.0, 1e-12);
  for (double d : r.per_node_diff) EXPECT_GE(d, 1.0);
  for (int m : r.mapping) EXPECT_NE(m, kUnmatched);
}

TEST(Align, GreedyWithinTenPercentOfOptimalOnFiveNodes) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Graph a = erdos_renyi(5, 0.5, RngSeed{2 * s});
    const Graph b = erdos_renyi(5, 0.5, RngSeed{2 * s + 1}, "b");
    const auto emb = embed_pair(a, b, RegalParams{}, s);
    const auto r = align_pair(emb.rows[0], emb.rows[1], 5);
    ASSERT_LE(r.mean_diff, 1.1 * optimal_mean_diff(emb.rows[0], emb.rows[1]) + 1e-12) << s;
  }
}

TEST(Counterpart, PicksExactCopy) {
  const Graph g = erdos_renyi(12, 0.3, RngSeed{6});
  const std::vector<Graph> gs{g, erdos_renyi(12, 0.3, RngSeed{7}, "x"), g.with_id("copy")};
  const auto emb = joint_embed(gs, RegalParams{}, RngSeed{1});
  const auto c = counterpart(emb, 0, 5);
  EXPECT_EQ(c.index, 2u);
  EXPECT_NEAR(c.mean_diff, 1.0, 1e-9);
}

TEST(Counterpart, NearCopyBeatsRandomGraph) {
  int wins = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Graph g = erdos_renyi(15, 0.3, RngSeed{s});
    const auto e = g.edges()[s % g.edge_count()];
    const std::vector<Edge> flip{e};
    const std::vector<Graph> gs{g, g.with_toggled(flip).with_id("near"), erdos_renyi(15, 0.3, RngSeed{s + 1000}, "r")};
    const auto emb = joint_embed(gs, RegalParams{}, RngSeed{s});
    wins += counterpart(emb, 0, 5).index == 1;
  }
  EXPECT_GE(wins, 95);
}

TEST(Counterpart, ScalingKeepsArgmin) {
  const std::vector<Graph> gs{erdos_renyi(10, 0.3, RngSeed{1}), erdos_renyi(10, 0.3, RngSeed{2}, "b"),
                              erdos_renyi(10, 0.4, RngSeed{3}, "c"), erdos_renyi(10, 0.2, RngSeed{4}, "d")};
  const auto emb = joint_embed(gs, RegalParams{}, RngSeed{1});
  std::vector<Eigen::MatrixXd> cands(emb.rows.begin() + 1, emb.rows.end()), scaled;
  for (const auto& m : cands) scaled.push_back(0.5 * m);
  EXPECT_EQ(counterpart(emb.rows[0], cands, 5).index, counterpart(0.5 * emb.rows[0], scaled, 5).index);
  EXPECT_THROW(counterpart(emb.rows[0], std::span<const Eigen::MatrixXd>{}, 5), InvalidArgument);
}
