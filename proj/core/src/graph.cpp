#include "lswjp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "lswjp/errors.hpp"

namespace lswjp {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_node(std::string_view field, NodeId& out) {
  if (parse_number(field, out)) return out >= 0;
  // Some exports write ids as "12.0".
  double as_real = 0.0;
  if (!parse_number(field, as_real) || as_real < 0.0 || std::floor(as_real) != as_real) return false;
  out = static_cast<NodeId>(as_real);
  return true;
}

std::vector<std::string_view> split_fields(std::string_view line, EdgeFormat format) {
  std::vector<std::string_view> fields;
  if (format == EdgeFormat::kCsv) {
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  } else {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size()) break;
      const auto end = line.find_first_of(" \t", pos);
      fields.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
      pos = end == std::string_view::npos ? line.size() : end;
    }
  }
  return fields;
}

[[noreturn]] void malformed(std::size_t line_no, std::string_view line, std::string_view why) {
  std::ostringstream msg;
  msg << "malformed edge on line " << line_no << " (" << why << "): '" << line << "'";
  throw DataError(msg.str());
}

}  // namespace

std::optional<EdgeFormat> parse_edge_format(std::string_view name) {
  if (name == "csv") return EdgeFormat::kCsv;
  if (name == "events") return EdgeFormat::kEvents;
  return std::nullopt;
}

std::string_view to_string(EdgeFormat format) {
  return format == EdgeFormat::kCsv ? "csv" : "events";
}

NodeIndex TemporalGraph::index_of(NodeId id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  if (it == nodes.end() || *it != id) {
    throw ArgumentError("unknown node id " + std::to_string(id));
  }
  return static_cast<NodeIndex>(it - nodes.begin());
}

bool TemporalGraph::contains(NodeId id) const {
  return std::binary_search(nodes.begin(), nodes.end(), id);
}

TemporalGraph load_edge_stream(std::istream& in, EdgeFormat format, std::string_view name) {
  TemporalGraph graph;
  graph.meta.name = std::string(name);
  graph.meta.event_counts = format == EdgeFormat::kEvents;

  std::string raw;
  std::size_t line_no = 0;
  std::size_t zero_weight = 0;
  std::size_t parsed = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == '%') continue;
    const auto fields = split_fields(line, format);
    const std::size_t expected = format == EdgeFormat::kCsv ? 4 : 3;
    if (fields.size() != expected) {
      malformed(line_no, line, "expected " + std::to_string(expected) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    TemporalEdge e;
    if (!parse_node(fields[0], e.source)) malformed(line_no, line, "bad source id");
    if (!parse_node(fields[1], e.target)) malformed(line_no, line, "bad target id");
    if (format == EdgeFormat::kCsv) {
      if (!parse_number(fields[2], e.weight) || !std::isfinite(e.weight)) {
        malformed(line_no, line, "bad weight");
      }
      if (!parse_number(fields[3], e.timestamp)) malformed(line_no, line, "bad timestamp");
    } else {
      e.weight = 1.0;
      if (!parse_number(fields[2], e.timestamp)) malformed(line_no, line, "bad timestamp");
    }
    if (!std::isfinite(e.timestamp)) malformed(line_no, line, "non-finite timestamp");
    ++parsed;
    if (e.weight == 0.0) {
      ++zero_weight;
      continue;
    }
    e.sign = e.weight > 0.0 ? 1 : -1;
    graph.edges.push_back(e);
  }

  if (parsed == 0) throw DataError("edge file is empty");
  if (graph.edges.empty()) {
    throw DataError("all " + std::to_string(zero_weight) + " edges have zero weight");
  }
  if (zero_weight > 0) {
    std::clog << "warning: rejected " << zero_weight << " zero-weight edge(s)\n";
  }
  graph.meta.rejected_zero_weight = zero_weight;

  std::vector<NodeId> ids;
  ids.reserve(graph.edges.size() * 2);
  double max_abs = 0.0;
  bool any_negative = false;
  bool non_unit = false;
  for (const auto& e : graph.edges) {
    ids.push_back(e.source);
    ids.push_back(e.target);
    max_abs = std::max(max_abs, std::abs(e.weight));
    any_negative |= e.sign < 0;
    non_unit |= std::abs(e.weight) != 1.0;
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  graph.nodes = std::move(ids);

  graph.meta.is_signed = any_negative;
  graph.meta.weight_scale = max_abs;
  if (format == EdgeFormat::kEvents) {
    // Repeated interactions aggregate into counts, which makes the data weighted.
    std::set<std::pair<NodeId, NodeId>> pairs;
    bool repeated = false;
    for (const auto& e : graph.edges) repeated |= !pairs.emplace(e.source, e.target).second;
    graph.meta.is_weighted = repeated;
  } else {
    graph.meta.is_weighted = non_unit;
  }
  return graph;
}

TemporalGraph load_edge_csv(const std::filesystem::path& path, EdgeFormat format,
                            std::string_view name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path.string());
  const std::string fallback = path.stem().string();
  return load_edge_stream(in, format, name.empty() ? std::string_view(fallback) : name);
}

DatasetStats dataset_stats(const TemporalGraph& graph) {
  DatasetStats stats;
  stats.nodes = graph.nodes.size();
  stats.events = graph.edges.size();
  stats.rejected_zero_weight = graph.meta.rejected_zero_weight;
  if (graph.meta.event_counts) {
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (const auto& e : graph.edges) pairs.emplace(e.source, e.target);
    stats.edges = pairs.size();
    stats.positive_edges = stats.edges;
    for (const auto& [s, t] : pairs) stats.self_loops += s == t;
  } else {
    stats.edges = graph.edges.size();
    for (const auto& e : graph.edges) {
      (e.sign > 0 ? stats.positive_edges : stats.negative_edges) += 1;
      stats.self_loops += e.source == e.target;
    }
  }
  return stats;
}

TemporalGraph normalize_weights(TemporalGraph graph) {
  if (graph.meta.normalized) return graph;
  const double scale = graph.meta.weight_scale;
  if (!(scale > 0.0)) throw DataError("cannot normalize: all weights are zero");
  if (!graph.meta.event_counts) {
    for (auto& e : graph.edges) e.weight /= scale;
  }
  graph.meta.normalized = true;
  return graph;
}

double denormalize_weight(double normalized, const DatasetMeta& meta) {
  return normalized * meta.weight_scale;
}

bool Snapshot::has_edge(NodeIndex source, NodeIndex target) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{source, target},
                             [](const SnapshotEdge& e, const std::pair<NodeIndex, NodeIndex>& k) {
                               return std::pair{e.source, e.target} < k;
                             });
  return it != edges.end() && it->source == source && it->target == target;
}

std::vector<SnapshotEdge> merge_edges(std::vector<SnapshotEdge> edges, bool clamp) {
  std::stable_sort(edges.begin(), edges.end(), [](const SnapshotEdge& a, const SnapshotEdge& b) {
    return std::pair{a.source, a.target} < std::pair{b.source, b.target};
  });
  std::vector<SnapshotEdge> merged;
  merged.reserve(edges.size());
  for (const auto& e : edges) {
    if (!merged.empty() && merged.back().source == e.source && merged.back().target == e.target) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  std::vector<SnapshotEdge> out;
  out.reserve(merged.size());
  for (auto e : merged) {
    if (clamp) e.weight = std::clamp(e.weight, -1.0, 1.0);
    if (e.weight != 0.0) out.push_back(e);
  }
  return out;
}

Snapshot make_snapshot(int index, std::vector<SnapshotEdge> edges,
                       std::vector<NodeIndex> extra_nodes, bool clamp) {
  Snapshot snap;
  snap.index = index;
  snap.raw_edge_count = edges.size();
  snap.edges = merge_edges(std::move(edges), clamp);
  auto& nodes = extra_nodes;
  for (const auto& e : snap.edges) {
    nodes.push_back(e.source);
    nodes.push_back(e.target);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  snap.nodes = std::move(nodes);
  return snap;
}

int bin_index(double timestamp, double t_min, double bin_width, int bins) {
  if (!(bin_width > 0.0)) return 0;
  const double pos = std::floor((timestamp - t_min) / bin_width);
  if (pos < 0.0) return 0;
  return pos >= bins ? bins - 1 : static_cast<int>(pos);
}

SnapshotSequence discretize(const TemporalGraph& graph, int bins) {
  if (bins <= 0) throw ArgumentError("number of snapshots T must be positive");
  if (graph.edges.empty()) throw DataError("cannot discretize an empty graph");
  if (!graph.meta.normalized) {
    throw ArgumentError("weights must be normalized before discretization");
  }

  SnapshotSequence seq;
  auto [lo, hi] = std::minmax_element(
      graph.edges.begin(), graph.edges.end(),
      [](const TemporalEdge& a, const TemporalEdge& b) { return a.timestamp < b.timestamp; });
  seq.t_min = lo->timestamp;
  seq.t_max = hi->timestamp;
  seq.bin_width = (seq.t_max - seq.t_min) / bins;

  std::vector<std::vector<SnapshotEdge>> buckets(bins);
  for (const auto& e : graph.edges) {
    const int t = bin_index(e.timestamp, seq.t_min, seq.bin_width, bins);
    buckets[t].push_back({graph.index_of(e.source), graph.index_of(e.target), e.weight});
  }

  const bool counts = graph.meta.event_counts;
  seq.snapshots.reserve(bins);
  for (int t = 0; t < bins; ++t) {
    seq.snapshots.push_back(make_snapshot(t, std::move(buckets[t]), {}, !counts));
  }

  seq.weight_scale = graph.meta.weight_scale;
  if (counts) {
    double max_count = 0.0;
    for (const auto& s : seq.snapshots) {
      for (const auto& e : s.edges) max_count = std::max(max_count, std::abs(e.weight));
    }
    for (auto& s : seq.snapshots) {
      for (auto& e : s.edges) e.weight /= max_count;
    }
    seq.weight_scale = max_count;
  }
  return seq;
}

std::vector<Window> make_windows(const SnapshotSequence& sequence, int n) {
  if (n < 1) throw ArgumentError("window size n must be at least 1");
  const int total = sequence.size();
  if (total <= n) {
    throw DataError("insufficient snapshots: T=" + std::to_string(total) +
                    " leaves no target for window size n=" + std::to_string(n));
  }
  std::vector<Window> windows;
  windows.reserve(total - n);
  for (int target = n; target < total; ++target) {
    Window w;
    w.target_t = target;
    std::vector<SnapshotEdge> all;
    std::vector<NodeIndex> nodes;
    for (int t = target - n; t < target; ++t) {
      const auto& snap = sequence.snapshots[t];
      w.snapshots.push_back(snap);
      all.insert(all.end(), snap.edges.begin(), snap.edges.end());
      nodes.insert(nodes.end(), snap.nodes.begin(), snap.nodes.end());
    }
    w.union_graph = make_snapshot(target, std::move(all), std::move(nodes));
    if (target - n - 1 >= 0) w.preceding = sequence.snapshots[target - n - 1];
    windows.push_back(std::move(w));
  }
  return windows;
}

SignedSubgraphs signed_subgraphs(const Snapshot& union_graph) {
  SignedSubgraphs out;
  out.positive.index = out.negative.index = union_graph.index;
  out.positive.nodes = out.negative.nodes = union_graph.nodes;
  for (const auto& e : union_graph.edges) {
    (e.weight > 0.0 ? out.positive : out.negative).edges.push_back(e);
  }
  out.positive.raw_edge_count = out.positive.edges.size();
  out.negative.raw_edge_count = out.negative.edges.size();
  return out;
}

void write_snapshot_dump(std::ostream& out, const SnapshotSequence& sequence,
                         const TemporalGraph& graph) {
  out.precision(17);
  for (const auto& snap : sequence.snapshots) {
    for (const auto& e : snap.edges) {
      out << snap.index << ',' << graph.nodes[e.source] << ',' << graph.nodes[e.target] << ','
          << e.weight << '\n';
    }
  }
}

}  // namespace lswjp
