#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lswjp/graph.hpp"

namespace lswjp {

struct WalkConfig {
  int num_walks = 5;     // walks started from every non-isolated node
  int walk_length = 10;  // maximum number of nodes per walk
  std::uint64_t seed = 0;

  void validate() const;
};

// Skip-Gram with negative sampling. Word2vec-style dynamic context window
// and a linearly decayed learning rate.
struct SkipGramConfig {
  int dim = 64;
  int context_window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 0;

  void validate() const;
};

// Out-edge adjacency of one signed subgraph (CSR over the subgraph's node set).
class WalkGraph {
 public:
  struct Arc {
    NodeIndex target;
    double magnitude;  // |w|
  };

  explicit WalkGraph(const Snapshot& subgraph);

  const std::vector<NodeIndex>& nodes() const { return nodes_; }
  bool contains(NodeIndex node) const;
  // Throws ArgumentError for nodes outside the subgraph.
  std::span<const Arc> out_arcs(NodeIndex node) const;
  // True when the node has neither in- nor out-edges.
  bool is_isolated(NodeIndex node) const;
  std::size_t edge_count() const { return arcs_.size(); }

 private:
  std::size_t local(NodeIndex node) const;

  std::vector<NodeIndex> nodes_;
  std::vector<std::size_t> offsets_;
  std::vector<Arc> arcs_;
  std::vector<bool> has_in_;
};

// Weight-proportional out-neighbour distribution; empty for sinks.
std::vector<std::pair<NodeIndex, double>> transition_distribution(NodeIndex node,
                                                                  const WalkGraph& graph);

using Walk = std::vector<NodeIndex>;

// Walks are ordered by (start node, walk number). Each walk draws from its
// own RNG stream derived from (seed, start node, walk number).
std::vector<Walk> generate_walks(const WalkGraph& graph, const WalkConfig& cfg);

// Returns a |universe| x dim matrix whose row k belongs to universe[k].
// Nodes that never occur in a walk keep an all-zero row. `universe` must be
// sorted and contain every walk node.
Eigen::MatrixXd train_skipgram(const std::vector<Walk>& walks, const SkipGramConfig& cfg,
                               std::span<const NodeIndex> universe);

struct SemanticEmbedding {
  int target_t = 0;
  std::vector<NodeIndex> nodes;  // sorted window node set, row order of `matrix`
  Eigen::MatrixXd matrix;        // [positive | negative], width 2 * dim

  int dim() const { return static_cast<int>(matrix.cols()); }
  // Row for `node`; nodes outside the window embed to zero.
  Eigen::VectorXd row(NodeIndex node) const;
  std::optional<Eigen::Index> row_index(NodeIndex node) const;
};

SemanticEmbedding window_embedding(const Window& window, const WalkConfig& walk_cfg,
                                   const SkipGramConfig& sg_cfg);

std::uint64_t semantic_config_hash(const WalkConfig& walk_cfg, const SkipGramConfig& sg_cfg);

// Binary per-window embedding cache, keyed by (dataset, t, seed, config hash).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path directory);

  std::filesystem::path path_for(const std::string& dataset, int target_t, std::uint64_t seed,
                                 std::uint64_t config_hash) const;
  std::optional<SemanticEmbedding> load(const std::string& dataset, int target_t,
                                        std::uint64_t seed, std::uint64_t config_hash) const;
  void store(const std::string& dataset, std::uint64_t seed, std::uint64_t config_hash,
             const SemanticEmbedding& embedding) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace lswjp
