#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lswjp/errors.hpp"
#include "lswjp/semantic.hpp"
#include "synthetic.hpp"

namespace lswjp {
namespace {

TEST(Transition, ProportionalToAbsoluteWeight) {
  const WalkGraph g(make_snapshot(0, {{0, 1, 0.2}, {0, 2, -0.3}}));
  const auto dist = transition_distribution(0, g);
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_EQ(dist[0].first, 1u);
  EXPECT_NEAR(dist[0].second, 0.4, 1e-12);
  EXPECT_NEAR(dist[1].second, 0.6, 1e-12);
}

TEST(Transition, SingleNeighbourIsCertain) {
  const WalkGraph g(make_snapshot(0, {{3, 4, 0.7}}));
  const auto dist = transition_distribution(3, g);
  ASSERT_EQ(dist.size(), 1u);
  EXPECT_EQ(dist[0].second, 1.0);
}

TEST(Transition, SinkHasEmptyDistribution) {
  const WalkGraph g(make_snapshot(0, {{3, 4, 0.7}}));
  EXPECT_TRUE(transition_distribution(4, g).empty());
}

TEST(Transition, UnknownNodeThrows) {
  const WalkGraph g(make_snapshot(0, {{3, 4, 0.7}}));
  EXPECT_THROW(transition_distribution(9, g), ArgumentError);
}

TEST(Transition, PropertyDistributionsSumToOne) {
  Rng rng(11);
  for (int c = 0; c < 1000; ++c) {
    const WalkGraph g(testing::random_snapshot(rng, 0, 8, 0.3));
    for (NodeIndex v : g.nodes()) {
      const auto dist = transition_distribution(v, g);
      if (dist.empty()) continue;
      double sum = 0.0;
      for (const auto& [_, p] : dist) {
        EXPECT_GT(p, 0.0);
        sum += p;
      }
      ASSERT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Walks, TerminateAtSinks) {
  const WalkGraph g(make_snapshot(0, {{0, 1, 1.0}}));
  WalkConfig cfg;
  const auto walks = generate_walks(g, cfg);
  // Node 1 only has an in-edge; its walks stop immediately.
  ASSERT_EQ(walks.size(), 10u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(walks[k], (Walk{0, 1}));
  for (int k = 5; k < 10; ++k) EXPECT_EQ(walks[k], (Walk{1}));
}

TEST(Walks, CountIsNumWalksPerNonIsolatedNode) {
  std::vector<SnapshotEdge> edges;
  for (NodeIndex i = 0; i < 100; ++i) edges.push_back({i, (i + 1) % 100, 0.5});
  const WalkGraph g(make_snapshot(0, edges, {500, 501}));
  const auto walks = generate_walks(g, WalkConfig{});
  EXPECT_EQ(walks.size(), 500u);
  for (const auto& w : walks) EXPECT_EQ(w.size(), 10u);
}

TEST(Walks, EmptyGraphHasNoWalks) {
  const WalkGraph g(make_snapshot(0, {}, {1, 2}));
  EXPECT_TRUE(generate_walks(g, WalkConfig{}).empty());
}

TEST(Walks, DeterministicUnderSeed) {
  Rng rng(3);
  const WalkGraph g(testing::random_snapshot(rng, 0, 15, 0.2));
  WalkConfig cfg;
  cfg.seed = 42;
  EXPECT_EQ(generate_walks(g, cfg), generate_walks(g, cfg));
  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(generate_walks(g, cfg), generate_walks(g, other));
}

TEST(Walks, PropertyFollowOutEdges) {
  Rng rng(5);
  for (int c = 0; c < 1000; ++c) {
    const auto snap = testing::random_snapshot(rng, 0, 7, 0.25);
    const WalkGraph g(snap);
    WalkConfig cfg;
    cfg.num_walks = 2;
    cfg.walk_length = 6;
    cfg.seed = static_cast<std::uint64_t>(c);
    for (const auto& walk : generate_walks(g, cfg)) {
      ASSERT_LE(walk.size(), 6u);
      for (std::size_t k = 0; k < walk.size(); ++k) ASSERT_TRUE(g.contains(walk[k]));
      for (std::size_t k = 1; k < walk.size(); ++k) ASSERT_TRUE(snap.has_edge(walk[k - 1], walk[k]));
      if (walk.size() < 6u) ASSERT_TRUE(g.out_arcs(walk.back()).empty());
    }
  }
}

TEST(WalkConfig, Validation) {
  WalkConfig cfg;
  cfg.num_walks = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.walk_length = 1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(SkipGram, ShapeContract) {
  std::vector<NodeIndex> universe(10);
  std::iota(universe.begin(), universe.end(), 0u);
  SkipGramConfig cfg;
  cfg.dim = 8;
  const auto m = train_skipgram({{0, 1, 2}, {3, 4}}, cfg, universe);
  EXPECT_EQ(m.rows(), 10);
  EXPECT_EQ(m.cols(), 8);
  for (int r = 5; r < 10; ++r) EXPECT_TRUE(m.row(r).isZero(0.0));
  EXPECT_FALSE(m.row(0).isZero(0.0));
  EXPECT_TRUE(m.allFinite());
}

TEST(SkipGram, EmptyCorpusGivesZeros) {
  const std::vector<NodeIndex> universe{1, 2, 3};
  const auto m = train_skipgram({}, SkipGramConfig{}, universe);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_TRUE(m.isZero(0.0));
}

TEST(SkipGram, RejectsWalkNodesOutsideUniverse) {
  const std::vector<NodeIndex> universe{1, 2};
  EXPECT_THROW(train_skipgram({{1, 7}}, SkipGramConfig{}, universe), ArgumentError);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

TEST(SkipGram, CoOccurringNodesEmbedCloser) {
  // a=0 and b=1 alternate; c=2 and d=3 alternate in a separate corpus part.
  std::vector<Walk> walks;
  for (int k = 0; k < 200; ++k) {
    walks.push_back({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    walks.push_back({2, 3, 2, 3, 2, 3, 2, 3, 2, 3});
  }
  const std::vector<NodeIndex> universe{0, 1, 2, 3};
  SkipGramConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 20;
  cfg.seed = 9;
  const auto m = train_skipgram(walks, cfg, universe);
  const Eigen::VectorXd a = m.row(0), b = m.row(1), c = m.row(2), d = m.row(3);
  EXPECT_GT(cosine(a, b), cosine(a, c));
  EXPECT_GT(cosine(a, b), cosine(a, d));
  EXPECT_GT(cosine(c, d), cosine(c, a));
}

TEST(SkipGram, DeterministicUnderSeed) {
  Rng rng(8);
  const WalkGraph g(testing::random_snapshot(rng, 0, 12, 0.3));
  const auto walks = generate_walks(g, WalkConfig{});
  SkipGramConfig cfg;
  cfg.dim = 8;
  cfg.seed = 3;
  const auto a = train_skipgram(walks, cfg, g.nodes());
  const auto b = train_skipgram(walks, cfg, g.nodes());
  EXPECT_TRUE((a.array() == b.array()).all());
}

Window window_of(const std::vector<SnapshotEdge>& edges) {
  Window w;
  w.target_t = 1;
  w.snapshots.push_back(make_snapshot(0, edges));
  w.union_graph = make_snapshot(0, edges);
  return w;
}

TEST(WindowEmbedding, WidthIsTwiceDim) {
  const auto emb = window_embedding(window_of({{0, 1, 0.5}, {1, 2, -0.5}, {2, 0, 0.3}}),
                                    WalkConfig{}, SkipGramConfig{});
  EXPECT_EQ(emb.matrix.cols(), 128);
  EXPECT_EQ(emb.matrix.rows(), 3);
  EXPECT_EQ(emb.target_t, 1);
  EXPECT_TRUE(emb.matrix.allFinite());
}

TEST(WindowEmbedding, UnsignedWindowHasZeroNegativeHalf) {
  const auto emb = window_embedding(window_of({{0, 1, 0.5}, {1, 2, 0.5}, {2, 0, 0.3}}),
                                    WalkConfig{}, SkipGramConfig{});
  EXPECT_TRUE(emb.matrix.rightCols(64).isZero(0.0));
  EXPECT_FALSE(emb.matrix.leftCols(64).isZero(0.0));
}

TEST(WindowEmbedding, NegativeOnlyNodeHasZeroPositiveHalf) {
  const auto emb = window_embedding(window_of({{0, 1, 0.5}, {1, 0, 0.5}, {2, 3, -0.4}}),
                                    WalkConfig{}, SkipGramConfig{});
  const auto r = emb.row_index(2).value();
  EXPECT_TRUE(emb.matrix.row(r).leftCols(64).isZero(0.0));
  EXPECT_FALSE(emb.matrix.row(r).rightCols(64).isZero(0.0));
  EXPECT_TRUE(emb.row(77).isZero(0.0));
}

TEST(EmbeddingCache, RoundTrips) {
  testing::TempDir dir;
  const EmbeddingCache cache(dir.path());
  const auto emb = window_embedding(window_of({{0, 1, 0.5}, {1, 2, -0.5}}), WalkConfig{},
                                    SkipGramConfig{});
  const auto hash = semantic_config_hash(WalkConfig{}, SkipGramConfig{});
  EXPECT_FALSE(cache.load("d", 1, 0, hash));
  cache.store("d", 0, hash, emb);
  const auto back = cache.load("d", 1, 0, hash);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->nodes, emb.nodes);
  EXPECT_TRUE((back->matrix.array() == emb.matrix.array()).all());
  EXPECT_FALSE(cache.load("d", 1, 1, hash));
}

TEST(SemanticHash, ChangesWithConfig) {
  SkipGramConfig other;
  other.dim = 32;
  EXPECT_NE(semantic_config_hash(WalkConfig{}, SkipGramConfig{}),
            semantic_config_hash(WalkConfig{}, other));
}

}  // namespace
}  // namespace lswjp
