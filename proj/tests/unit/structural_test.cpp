#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lswjp/errors.hpp"
#include "lswjp/structural.hpp"
#include "checks.hpp"
#include "synthetic.hpp"

namespace lswjp {
namespace {

NodeIndexMap dense_index(int n) {
  std::vector<NodeIndex> v(n);
  for (int i = 0; i < n; ++i) v[i] = static_cast<NodeIndex>(i);
  return NodeIndexMap(v);
}

TEST(SignedTransition, RowNormalized) {
  const auto t = signed_transition(make_snapshot(0, {{0, 1, 0.5}, {0, 2, -0.5}}), dense_index(3));
  const Eigen::MatrixXd p(t.matrix);
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_EQ(p(0, 1), 0.5);
  EXPECT_EQ(p(0, 2), -0.5);
  EXPECT_TRUE(p.row(1).isZero(0.0));
  EXPECT_TRUE(p.row(2).isZero(0.0));
}

TEST(SignedTransition, SingleNegativeEdge) {
  const auto t = signed_transition(make_snapshot(0, {{0, 1, -1.0}}), dense_index(2));
  EXPECT_EQ(Eigen::MatrixXd(t.matrix)(0, 1), -1.0);
}

TEST(SignedTransition, PropertyRowAbsSums) {
  Rng rng(21);
  for (int c = 0; c < 1000; ++c) {
    const auto s = testing::random_snapshot(rng, 0, 10, 0.2);
    const Eigen::MatrixXd p(signed_transition(s, dense_index(10)).matrix);
    for (int i = 0; i < 10; ++i) {
      const double sum = p.row(i).cwiseAbs().sum();
      ASSERT_TRUE(sum == 0.0 || std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST(Multihop, OneHopIsTransition) {
  Rng rng(2);
  const auto s = testing::random_snapshot(rng, 0, 9, 0.3);
  const auto t = signed_transition(s, dense_index(9));
  EXPECT_TRUE(multihop_cumulative(t, 1).to_dense().isApprox(Eigen::MatrixXd(t.matrix), 0.0));
}

TEST(Multihop, NilpotentTransitionStopsAccumulating) {
  const auto t = signed_transition(make_snapshot(0, {{0, 1, 0.5}, {0, 2, -0.5}}), dense_index(3));
  const Eigen::MatrixXd s2 = multihop_cumulative(t, 2).to_dense();
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  expected(0, 1) = 0.5;
  expected(0, 2) = -0.5;
  EXPECT_EQ((s2 - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Multihop, RejectsNonPositiveHops) {
  const auto t = signed_transition(make_snapshot(0, {{0, 1, 0.5}}), dense_index(2));
  EXPECT_THROW(multihop_cumulative(t, 0), ArgumentError);
  EXPECT_THROW(multihop_cumulative(t, -1), ArgumentError);
}

TEST(Multihop, MatchesBruteForceOracle) {
  EXPECT_LT(testing::multihop_oracle_error(200, 1234), 1e-9);
}

TEST(Multihop, OracleAgreesOnHandExample) {
  const auto s = make_snapshot(0, {{0, 1, 0.5}, {1, 0, -0.5}, {1, 2, 0.5}});
  const auto oracle = testing::brute_force_cumulative(s, 3, 2);
  // P = [[0,1,0],[-.5,0,.5],[0,0,0]], P^2 = [[-.5,0,.5],[0,-.5,0],[0,0,0]]
  EXPECT_DOUBLE_EQ(oracle(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(oracle(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(oracle(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(oracle(1, 1), -0.5);
}

TEST(Multihop, DenseFallbackAgreesWithSparse) {
  Rng rng(4);
  const auto s = testing::random_snapshot(rng, 0, 15, 0.5);
  const auto t = signed_transition(s, dense_index(15));
  const auto sparse = multihop_cumulative(t, 4, 1.1);
  const auto dense = multihop_cumulative(t, 4, 0.0);
  EXPECT_FALSE(sparse.is_dense());
  EXPECT_TRUE(dense.is_dense());
  EXPECT_LT((sparse.to_dense() - dense.to_dense()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sparse.row_sums() - dense.row_sums()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Balance, MixedRow) {
  Eigen::MatrixXd s(1, 2);
  s << 0.5, -0.5;
  const auto f = balance_features(PropagationMatrix(s));
  EXPECT_DOUBLE_EQ(f.r_plus()(0), 1.0);
  EXPECT_DOUBLE_EQ(f.r_minus()(0), 1.0);
  EXPECT_DOUBLE_EQ(f.balance()(0), 0.0);
  EXPECT_DOUBLE_EQ(f.strength()(0), 2.0);
}

TEST(Balance, AllPositiveRow) {
  Eigen::MatrixXd s(1, 3);
  s << 0.2, 0.0, 0.3;
  const auto f = balance_features(PropagationMatrix(s));
  EXPECT_EQ(f.r_minus()(0), 0.0);
  EXPECT_EQ(f.balance()(0), 1.0);
}

TEST(Balance, ZeroRowIsNeutral) {
  const auto f = balance_features(PropagationMatrix(Eigen::MatrixXd::Zero(2, 2)));
  EXPECT_TRUE(f.values.isZero(0.0));
}

TEST(Balance, PropertyBoundsAndIdentities) {
  Rng rng(99);
  std::uniform_int_distribution<int> hops(1, 4);
  for (int c = 0; c < 1000; ++c) {
    const auto snap = testing::random_snapshot(rng, 0, 8, 0.3);
    const auto s = multihop_cumulative(signed_transition(snap, dense_index(8)), hops(rng));
    const auto f = balance_features(s);
    const Eigen::VectorXd sigma = s.row_sums();
    const Eigen::VectorXd alpha = s.abs_row_sums();
    for (int i = 0; i < 8; ++i) {
      ASSERT_GE(f.r_plus()(i), 0.0);
      ASSERT_GE(f.r_minus()(i), 0.0);
      ASSERT_GE(f.balance()(i), -1.0);
      ASSERT_LE(f.balance()(i), 1.0);
      ASSERT_NEAR(f.r_plus()(i) - f.r_minus()(i), 2.0 * sigma(i), 1e-9);
      ASSERT_NEAR(f.r_plus()(i) + f.r_minus()(i), 2.0 * alpha(i), 1e-9);
      ASSERT_NEAR(f.strength()(i), f.r_plus()(i) + f.r_minus()(i), 1e-12);
      if (f.strength()(i) == 0.0) ASSERT_EQ(f.balance()(i), 0.0);
    }
  }
}

TEST(Balance, AllPositiveSnapshotIsFullyBalanced) {
  Rng rng(17);
  for (int c = 0; c < 100; ++c) {
    const auto snap = testing::random_snapshot(rng, 0, 10, 0.3, false);
    const auto f =
        balance_features(multihop_cumulative(signed_transition(snap, dense_index(10)), 3));
    for (int i = 0; i < 10; ++i) {
      if (f.strength()(i) == 0.0) continue;
      ASSERT_EQ(f.r_minus()(i), 0.0);
      ASSERT_DOUBLE_EQ(f.balance()(i), 1.0);
    }
  }
}

TEST(TemporalDiff, PositiveInWeightChange) {
  // Node 1 receives 0.3 now and 0.1 before.
  const auto idx = dense_index(2);
  const auto d = temporal_diff(make_snapshot(1, {{0, 1, 0.3}}), nullptr, idx);
  const auto prev = make_snapshot(0, {{0, 1, 0.1}});
  const auto d2 = temporal_diff(make_snapshot(1, {{0, 1, 0.3}}), &prev, idx);
  EXPECT_NEAR(d2.values(1, 0), 0.2, 1e-12);
  EXPECT_EQ(d2.values(1, 1), 0.0);
  EXPECT_EQ(d2.values(1, 2), 0.0);
  EXPECT_EQ(d2.values(1, 3), 0.0);
  EXPECT_NEAR(d.values(1, 0), 0.3, 1e-12);
  EXPECT_NEAR(d2.values(0, 1), 0.2, 1e-12);
}

TEST(TemporalDiff, NegativeChannelUsesMagnitudes) {
  const auto idx = dense_index(2);
  const auto prev = make_snapshot(0, {}, {0, 1});
  const auto d = temporal_diff(make_snapshot(1, {{1, 0, -0.4}}), &prev, idx);
  EXPECT_EQ(d.values(0, 0), 0.0);
  EXPECT_EQ(d.values(0, 1), 0.0);
  EXPECT_NEAR(d.values(0, 2), 0.4, 1e-12);
  EXPECT_EQ(d.values(0, 3), 0.0);
  EXPECT_NEAR(d.values(1, 3), 0.4, 1e-12);
}

TEST(TemporalDiff, PropertyIdenticalSnapshotsGiveZero) {
  Rng rng(31);
  for (int c = 0; c < 1000; ++c) {
    const auto s = testing::random_snapshot(rng, 0, 9, 0.25);
    const auto d = temporal_diff(s, &s, dense_index(9));
    ASSERT_TRUE(d.values.isZero(0.0));
  }
}

TEST(TemporalDiff, UntouchedNodesAreZero) {
  const auto prev = make_snapshot(0, {{0, 1, 0.5}, {2, 3, 0.2}});
  const auto curr = make_snapshot(1, {{0, 1, 0.9}, {2, 3, 0.2}});
  const auto d = temporal_diff(curr, &prev, dense_index(5));
  EXPECT_TRUE(d.values.row(2).isZero(0.0));
  EXPECT_TRUE(d.values.row(3).isZero(0.0));
  EXPECT_TRUE(d.values.row(4).isZero(0.0));
}

Window make_window(std::vector<Snapshot> snaps) {
  Window w;
  w.target_t = static_cast<int>(snaps.size());
  std::vector<SnapshotEdge> all;
  std::vector<NodeIndex> nodes;
  for (const auto& s : snaps) {
    all.insert(all.end(), s.edges.begin(), s.edges.end());
    nodes.insert(nodes.end(), s.nodes.begin(), s.nodes.end());
  }
  w.snapshots = std::move(snaps);
  w.union_graph = make_snapshot(0, all, nodes);
  return w;
}

TEST(StructuralBlock, OneMatrixPerSnapshot) {
  Rng rng(6);
  std::vector<Snapshot> snaps;
  for (int t = 0; t < 10; ++t) snaps.push_back(testing::random_snapshot(rng, t, 6, 0.3));
  const auto w = make_window(snaps);
  const NodeIndexMap idx(w.nodes());
  const auto block = structural_block(w, 2, idx);
  ASSERT_EQ(block.size(), 10u);
  for (const auto& m : block) {
    EXPECT_EQ(m.cols(), kStructuralWidth);
    EXPECT_EQ(m.rows(), idx.size());
    EXPECT_TRUE(m.allFinite());
  }
}

TEST(StructuralBlock, EmptySnapshotGivesZeroMatrix) {
  const auto w = make_window({make_snapshot(0, {{0, 1, 0.5}}), make_snapshot(1, {})});
  const auto block = structural_block(w, 2, NodeIndexMap(w.nodes()));
  // The diff of the second step is the loss of the first edge, balance is 0.
  EXPECT_TRUE(block[1].leftCols(4).isZero(0.0));
  const auto zero_window = make_window({make_snapshot(0, {}, {0, 1}), make_snapshot(1, {})});
  for (const auto& m : structural_block(zero_window, 2, NodeIndexMap(zero_window.nodes()))) {
    EXPECT_TRUE(m.isZero(0.0));
  }
}

TEST(StructuralBlock, MatchesComponentFeatures) {
  const auto s0 = make_snapshot(0, {{0, 1, 0.5}, {1, 2, -0.25}});
  const auto s1 = make_snapshot(1, {{0, 1, 0.5}, {2, 0, 1.0}});
  const auto w = make_window({s0, s1});
  const NodeIndexMap idx(w.nodes());
  const auto block = structural_block(w, 2, idx);
  const auto bal1 = balance_features(multihop_cumulative(signed_transition(s1, NodeIndexMap(s1.nodes)), 2));
  const auto diff1 = temporal_diff(s1, &s0, NodeIndexMap(s1.nodes));
  for (int r = 0; r < 3; ++r) {
    EXPECT_NEAR((block[1].row(r).leftCols(4) - bal1.values.row(r)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR((block[1].row(r).rightCols(4) - diff1.values.row(r)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(StructuralBlock, AbsentNodesAreZero) {
  const auto w = make_window({make_snapshot(0, {{0, 1, 0.5}}), make_snapshot(1, {{2, 3, 0.5}})});
  const NodeIndexMap idx(w.nodes());
  const auto block = structural_block(w, 2, idx);
  EXPECT_TRUE(block[0].row(*idx.local(2)).isZero(0.0));
  EXPECT_TRUE(block[0].row(*idx.local(3)).isZero(0.0));
  EXPECT_TRUE(block[1].row(*idx.local(0)).isZero(0.0));
}

TEST(StructuralBlock, PrecedingBaselineUsesSnapshotBeforeWindow) {
  auto w = make_window({make_snapshot(1, {{0, 1, 0.5}})});
  w.preceding = make_snapshot(0, {{0, 1, 0.5}});
  const NodeIndexMap idx(w.nodes());
  EXPECT_TRUE(structural_block(w, 1, idx, DiffBaseline::kPreceding)[0].rightCols(4).isZero(0.0));
  EXPECT_FALSE(structural_block(w, 1, idx, DiffBaseline::kZero)[0].rightCols(4).isZero(0.0));
}

TEST(SimpleSignBlock, SumsIncidentWeights) {
  const auto w = make_window({make_snapshot(0, {{0, 1, 0.5}, {2, 0, -0.25}, {1, 2, 0.1}})});
  const NodeIndexMap idx(w.nodes());
  const auto block = simple_sign_block(w, idx);
  ASSERT_EQ(block.size(), 1u);
  EXPECT_EQ(block[0].cols(), kSimpleSignWidth);
  EXPECT_NEAR(block[0](0, 0), 0.5, 1e-12);
  EXPECT_NEAR(block[0](0, 1), 0.25, 1e-12);
  EXPECT_NEAR(block[0](1, 0), 0.6, 1e-12);
}

TEST(NodeIndexMap, LocalAndGlobal) {
  const NodeIndexMap idx({7, 3, 7, 5});
  EXPECT_EQ(idx.size(), 3);
  EXPECT_EQ(idx.global(0), 3u);
  EXPECT_EQ(idx.at(7), 2);
  EXPECT_FALSE(idx.local(4));
  EXPECT_THROW(idx.at(4), ArgumentError);
}

TEST(FeatureDump, HeaderAndRows) {
  std::istringstream in("10,20,1,0\n");
  const auto g = normalize_weights(load_edge_stream(in, EdgeFormat::kCsv));
  const NodeIndexMap idx({0, 1});
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2, 8);
  block(1, 0) = 2.0;
  std::ostringstream out;
  write_feature_dump(out, block, idx, g);
  EXPECT_EQ(out.str(),
            "10,0,0,0,0,0,0,0,0\n20,2,0,0,0,0,0,0,0\n");
}

}  // namespace
}  // namespace lswjp
