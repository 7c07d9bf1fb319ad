#include "lswjp/structural.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lswjp/errors.hpp"

namespace lswjp {

NodeIndexMap::NodeIndexMap(std::vector<NodeIndex> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
}

std::optional<int> NodeIndexMap::local(NodeIndex node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end() || *it != node) return std::nullopt;
  return static_cast<int>(it - nodes_.begin());
}

int NodeIndexMap::at(NodeIndex node) const {
  if (auto r = local(node)) return *r;
  throw ArgumentError("node " + std::to_string(node) + " is not covered by the node index");
}

SignedTransition signed_transition(const Snapshot& snapshot, const NodeIndexMap& index) {
  const int n = index.size();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(snapshot.edges.size());
  for (const auto& e : snapshot.edges) {
    const int i = index.at(e.source);
    const int j = index.at(e.target);
    triplets.emplace_back(i, j, e.weight);
    degree[i] += std::abs(e.weight);
  }
  SignedTransition out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  for (int i = 0; i < n; ++i) {
    if (degree[i] == 0.0) continue;
    for (SparseMatrix::InnerIterator it(out.matrix, i); it; ++it) it.valueRef() /= degree[i];
  }
  return out;
}

Eigen::Index PropagationMatrix::rows() const {
  return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

Eigen::VectorXd PropagationMatrix::row_sums() const {
  if (auto* d = std::get_if<Eigen::MatrixXd>(&storage_)) return d->rowwise().sum();
  const auto& s = std::get<SparseMatrix>(storage_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.rows());
  for (Eigen::Index i = 0; i < s.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) out[i] += it.value();
  }
  return out;
}

Eigen::VectorXd PropagationMatrix::abs_row_sums() const {
  if (auto* d = std::get_if<Eigen::MatrixXd>(&storage_)) return d->cwiseAbs().rowwise().sum();
  const auto& s = std::get<SparseMatrix>(storage_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.rows());
  for (Eigen::Index i = 0; i < s.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) out[i] += std::abs(it.value());
  }
  return out;
}

Eigen::MatrixXd PropagationMatrix::to_dense() const {
  if (auto* d = std::get_if<Eigen::MatrixXd>(&storage_)) return *d;
  return Eigen::MatrixXd(std::get<SparseMatrix>(storage_));
}

PropagationMatrix multihop_cumulative(const SignedTransition& transition, int hops,
                                      double densify_fill) {
  if (hops <= 0) throw ArgumentError("hop count h must be positive");
  const SparseMatrix& p = transition.matrix;
  const double cells = static_cast<double>(p.rows()) * static_cast<double>(p.cols());

  SparseMatrix power = p;
  SparseMatrix total = p;
  int k = 1;
  for (; k < hops; ++k) {
    if (cells > 0.0 && static_cast<double>(power.nonZeros()) > densify_fill * cells) break;
    power = SparseMatrix(power * p);
    total += power;
  }
  if (k == hops) return PropagationMatrix(std::move(total));

  const Eigen::MatrixXd dense_p(p);
  Eigen::MatrixXd dense_power(power);
  Eigen::MatrixXd dense_total(total);
  for (; k < hops; ++k) {
    dense_power = dense_power * dense_p;
    dense_total += dense_power;
  }
  return PropagationMatrix(std::move(dense_total));
}

BalanceFeatures balance_features(const PropagationMatrix& cumulative) {
  const Eigen::VectorXd sigma = cumulative.row_sums();
  const Eigen::VectorXd alpha = cumulative.abs_row_sums();
  BalanceFeatures f;
  f.values.resize(sigma.size(), 4);
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    // r+ and r- follow the row-sum decomposition without a 1/2 factor.
    const double r_plus = std::max(alpha[i] + sigma[i], 0.0);
    const double r_minus = std::max(alpha[i] - sigma[i], 0.0);
    const double a = r_plus + r_minus;
    const double b = a > 0.0 ? std::clamp((r_plus - r_minus) / a, -1.0, 1.0) : 0.0;
    f.values.row(i) << r_plus, r_minus, b, a;
  }
  return f;
}

namespace {

// Columns: in+, out+, in-, out- (magnitudes).
Eigen::MatrixXd signed_degrees(const Snapshot& snapshot, const NodeIndexMap& index) {
  Eigen::MatrixXd deg = Eigen::MatrixXd::Zero(index.size(), 4);
  for (const auto& e : snapshot.edges) {
    const auto src = index.local(e.source);
    const auto dst = index.local(e.target);
    const double mag = std::abs(e.weight);
    const int offset = e.weight > 0.0 ? 0 : 2;
    if (dst) deg(*dst, offset + 0) += mag;
    if (src) deg(*src, offset + 1) += mag;
  }
  return deg;
}

}  // namespace

TemporalDiff temporal_diff(const Snapshot& current, const Snapshot* previous,
                           const NodeIndexMap& index) {
  TemporalDiff diff;
  diff.values = signed_degrees(current, index);
  if (previous != nullptr) diff.values -= signed_degrees(*previous, index);
  return diff;
}

std::vector<Eigen::MatrixXd> structural_block(const Window& window, int hops,
                                              const NodeIndexMap& index, DiffBaseline baseline) {
  if (hops <= 0) throw ArgumentError("hop count h must be positive");
  std::vector<Eigen::MatrixXd> block;
  block.reserve(window.snapshots.size());
  for (std::size_t tau = 0; tau < window.snapshots.size(); ++tau) {
    const Snapshot& snap = window.snapshots[tau];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(index.size(), kStructuralWidth);
    if (!snap.edges.empty()) {
      // Work on the snapshot's own nodes; |eta| is usually far below |index|.
      const NodeIndexMap local(snap.nodes);
      const auto balance = balance_features(multihop_cumulative(signed_transition(snap, local), hops));
      const Snapshot* prev = nullptr;
      if (tau > 0) {
        prev = &window.snapshots[tau - 1];
      } else if (baseline == DiffBaseline::kPreceding && window.preceding) {
        prev = &*window.preceding;
      }
      const auto diff = temporal_diff(snap, prev, local);
      for (int r = 0; r < local.size(); ++r) {
        const auto row = index.local(local.global(r));
        if (!row) continue;
        m.row(*row).head<4>() = balance.values.row(r);
        m.row(*row).tail<4>() = diff.values.row(r);
      }
    }
    block.push_back(std::move(m));
  }
  return block;
}

std::vector<Eigen::MatrixXd> simple_sign_block(const Window& window, const NodeIndexMap& index) {
  std::vector<Eigen::MatrixXd> block;
  block.reserve(window.snapshots.size());
  for (const auto& snap : window.snapshots) {
    const Eigen::MatrixXd deg = signed_degrees(snap, index);
    Eigen::MatrixXd m(index.size(), kSimpleSignWidth);
    m.col(0) = deg.col(0) + deg.col(1);
    m.col(1) = deg.col(2) + deg.col(3);
    block.push_back(std::move(m));
  }
  return block;
}

void write_feature_dump(std::ostream& out, const Eigen::MatrixXd& block,
                        const NodeIndexMap& index, const TemporalGraph& graph) {
  if (block.cols() != kStructuralWidth || block.rows() != index.size()) {
    throw ShapeError("feature dump expects a |index| x 8 block");
  }
  out.precision(17);
  for (int r = 0; r < index.size(); ++r) {
    out << graph.nodes[index.global(r)];
    for (int c = 0; c < kStructuralWidth; ++c) out << ',' << block(r, c);
    out << '\n';
  }
}

}  // namespace lswjp
