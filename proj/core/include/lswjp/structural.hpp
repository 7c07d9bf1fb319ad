#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lswjp/graph.hpp"

namespace lswjp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Maps a sorted set of global node indices onto rows 0..size()-1.
class NodeIndexMap {
 public:
  NodeIndexMap() = default;
  explicit NodeIndexMap(std::vector<NodeIndex> nodes);

  std::optional<int> local(NodeIndex node) const;
  // Throws ArgumentError when `node` is not covered.
  int at(NodeIndex node) const;
  NodeIndex global(int row) const { return nodes_[row]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<NodeIndex>& nodes() const { return nodes_; }

 private:
  std::vector<NodeIndex> nodes_;
};

// Row-normalized signed adjacency: each nonzero row has absolute sum 1.
struct SignedTransition {
  SparseMatrix matrix;
};

SignedTransition signed_transition(const Snapshot& snapshot, const NodeIndexMap& index);

// Cumulative multi-hop transition matrix. Stays sparse until the running
// power passes the fill threshold, then switches to dense storage.
class PropagationMatrix {
 public:
  explicit PropagationMatrix(SparseMatrix m) : storage_(std::move(m)) {}
  explicit PropagationMatrix(Eigen::MatrixXd m) : storage_(std::move(m)) {}

  bool is_dense() const { return std::holds_alternative<Eigen::MatrixXd>(storage_); }
  Eigen::Index rows() const;
  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd abs_row_sums() const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::variant<SparseMatrix, Eigen::MatrixXd> storage_;
};

PropagationMatrix multihop_cumulative(const SignedTransition& transition, int hops,
                                      double densify_fill = 0.5);

// Columns: r_plus, r_minus, b (balance coefficient), a (total strength).
struct BalanceFeatures {
  Eigen::MatrixXd values;

  auto r_plus() const { return values.col(0); }
  auto r_minus() const { return values.col(1); }
  auto balance() const { return values.col(2); }
  auto strength() const { return values.col(3); }
};

BalanceFeatures balance_features(const PropagationMatrix& cumulative);

// Columns: d in-weight+, d out-weight+, d in-weight-, d out-weight-.
// Negative channels use magnitudes.
struct TemporalDiff {
  Eigen::MatrixXd values;
};

// `previous == nullptr` differences against an all-zero snapshot.
TemporalDiff temporal_diff(const Snapshot& current, const Snapshot* previous,
                           const NodeIndexMap& index);

enum class DiffBaseline {
  kZero,       // first snapshot of a window differences against zero
  kPreceding,  // ... against the snapshot right before the window
};

inline constexpr int kStructuralWidth = 8;
inline constexpr int kSimpleSignWidth = 2;

// One |index| x 8 matrix per window snapshot: [balance(4) | diff(4)].
// Rows of nodes absent from a snapshot are zero for that snapshot.
std::vector<Eigen::MatrixXd> structural_block(const Window& window, int hops,
                                              const NodeIndexMap& index,
                                              DiffBaseline baseline = DiffBaseline::kZero);

// Per snapshot: sum of positive weights and sum of |negative weights| over
// each node's incident edges (|index| x 2).
std::vector<Eigen::MatrixXd> simple_sign_block(const Window& window, const NodeIndexMap& index);

// `node_id,r_plus,r_minus,b,a,d1,d2,d3,d4` for every row of `block`.
void write_feature_dump(std::ostream& out, const Eigen::MatrixXd& block,
                        const NodeIndexMap& index, const TemporalGraph& graph);

}  // namespace lswjp
