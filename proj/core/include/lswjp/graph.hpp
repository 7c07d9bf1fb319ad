#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lswjp {

// Original node identifier as it appears in the dataset file.
using NodeId = std::int64_t;
// Dense position of a node in TemporalGraph::nodes. Snapshots and windows
// refer to nodes by NodeIndex.
using NodeIndex = std::uint32_t;

enum class EdgeFormat {
  kCsv,     // SOURCE,TARGET,WEIGHT,TIMESTAMP
  kEvents,  // SOURCE TARGET TIMESTAMP, every line is one +1 interaction
};

std::optional<EdgeFormat> parse_edge_format(std::string_view name);
std::string_view to_string(EdgeFormat format);

struct TemporalEdge {
  NodeId source = 0;
  NodeId target = 0;
  double weight = 0.0;
  int sign = 1;
  double timestamp = 0.0;
};

struct DatasetMeta {
  std::string name;
  bool is_signed = false;
  bool is_weighted = false;
  // Max absolute raw weight. For event datasets this is the largest merged
  // per-snapshot interaction count and is only known after discretization.
  double weight_scale = 1.0;
  bool event_counts = false;
  bool normalized = false;
  std::size_t rejected_zero_weight = 0;
};

struct TemporalGraph {
  std::vector<NodeId> nodes;  // sorted, unique; union of all endpoints
  std::vector<TemporalEdge> edges;
  DatasetMeta meta;

  // Throws ArgumentError for ids that are not part of the graph.
  NodeIndex index_of(NodeId id) const;
  bool contains(NodeId id) const;
};

struct DatasetStats {
  std::size_t nodes = 0;
  // For csv data one line is one edge. For event data an edge is a distinct
  // directed (source, target) pair and `events` counts the raw lines.
  std::size_t edges = 0;
  std::size_t positive_edges = 0;
  std::size_t negative_edges = 0;
  std::size_t events = 0;
  std::size_t self_loops = 0;
  std::size_t rejected_zero_weight = 0;
};

TemporalGraph load_edge_csv(const std::filesystem::path& path, EdgeFormat format,
                            std::string_view name = {});
TemporalGraph load_edge_stream(std::istream& in, EdgeFormat format, std::string_view name = {});

DatasetStats dataset_stats(const TemporalGraph& graph);

// Divides every weight by meta.weight_scale. Event datasets keep their
// unit weights here; their scale is applied by discretize().
TemporalGraph normalize_weights(TemporalGraph graph);

double denormalize_weight(double normalized, const DatasetMeta& meta);

struct SnapshotEdge {
  NodeIndex source = 0;
  NodeIndex target = 0;
  double weight = 0.0;

  friend bool operator==(const SnapshotEdge&, const SnapshotEdge&) = default;
};

struct Snapshot {
  int index = 0;
  std::vector<SnapshotEdge> edges;  // sorted by (source, target), unique pairs
  std::vector<NodeIndex> nodes;     // sorted
  std::size_t raw_edge_count = 0;   // edges before duplicate merging

  std::size_t node_count() const { return nodes.size(); }
  bool has_edge(NodeIndex source, NodeIndex target) const;
};

struct SnapshotSequence {
  std::vector<Snapshot> snapshots;
  double bin_width = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double weight_scale = 1.0;

  int size() const { return static_cast<int>(snapshots.size()); }
};

// Sums duplicate pairs, clamps to [-1, 1] and drops pairs that merge to 0.
std::vector<SnapshotEdge> merge_edges(std::vector<SnapshotEdge> edges, bool clamp = true);

// Builds a snapshot from (possibly duplicated) edges; `nodes` defaults to the
// endpoints of the merged edges.
Snapshot make_snapshot(int index, std::vector<SnapshotEdge> edges,
                       std::vector<NodeIndex> extra_nodes = {}, bool clamp = true);

int bin_index(double timestamp, double t_min, double bin_width, int bins);

SnapshotSequence discretize(const TemporalGraph& graph, int bins);

struct Window {
  int target_t = 0;
  std::vector<Snapshot> snapshots;    // oldest first, size n
  Snapshot union_graph;               // merge of `snapshots`
  std::optional<Snapshot> preceding;  // snapshot right before the window, if any

  int length() const { return static_cast<int>(snapshots.size()); }
  const std::vector<NodeIndex>& nodes() const { return union_graph.nodes; }
};

std::vector<Window> make_windows(const SnapshotSequence& sequence, int n);

struct SignedSubgraphs {
  Snapshot positive;
  Snapshot negative;
};

// Edge-disjoint split by sign; both halves keep the full node set.
SignedSubgraphs signed_subgraphs(const Snapshot& union_graph);

// Line-oriented `t,src,dst,normalized_weight` dump using original node ids.
void write_snapshot_dump(std::ostream& out, const SnapshotSequence& sequence,
                         const TemporalGraph& graph);

}  // namespace lswjp
