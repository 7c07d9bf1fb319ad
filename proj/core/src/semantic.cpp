#include "lswjp/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "lswjp/errors.hpp"
#include "lswjp/hash.hpp"
#include "lswjp/random.hpp"

namespace lswjp {

void WalkConfig::validate() const {
  if (num_walks < 1) throw ArgumentError("num_walks must be >= 1");
  if (walk_length < 2) throw ArgumentError("walk_length must be >= 2");
}

void SkipGramConfig::validate() const {
  if (dim < 1) throw ArgumentError("embedding dim must be >= 1");
  if (context_window < 1) throw ArgumentError("context_window must be >= 1");
  if (negatives < 1) throw ArgumentError("negatives must be >= 1");
  if (epochs < 1) throw ArgumentError("skip-gram epochs must be >= 1");
  if (!(initial_lr > 0.0)) throw ArgumentError("skip-gram learning rate must be positive");
}

WalkGraph::WalkGraph(const Snapshot& subgraph) : nodes_(subgraph.nodes) {
  for (const auto& e : subgraph.edges) {
    nodes_.push_back(e.source);
    nodes_.push_back(e.target);
  }
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());

  offsets_.assign(nodes_.size() + 1, 0);
  has_in_.assign(nodes_.size(), false);
  for (const auto& e : subgraph.edges) {
    ++offsets_[local(e.source) + 1];
    has_in_[local(e.target)] = true;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) offsets_[i + 1] += offsets_[i];
  arcs_.resize(subgraph.edges.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Snapshot edges are sorted by (source, target), so arcs stay sorted per row.
  for (const auto& e : subgraph.edges) {
    arcs_[cursor[local(e.source)]++] = Arc{e.target, std::abs(e.weight)};
  }
}

bool WalkGraph::contains(NodeIndex node) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), node);
}

std::size_t WalkGraph::local(NodeIndex node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end() || *it != node) {
    throw ArgumentError("node " + std::to_string(node) + " is not part of the subgraph");
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::span<const WalkGraph::Arc> WalkGraph::out_arcs(NodeIndex node) const {
  const auto i = local(node);
  return {arcs_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool WalkGraph::is_isolated(NodeIndex node) const {
  const auto i = local(node);
  return offsets_[i + 1] == offsets_[i] && !has_in_[i];
}

std::vector<std::pair<NodeIndex, double>> transition_distribution(NodeIndex node,
                                                                  const WalkGraph& graph) {
  const auto arcs = graph.out_arcs(node);
  double total = 0.0;
  for (const auto& a : arcs) total += a.magnitude;
  std::vector<std::pair<NodeIndex, double>> dist;
  if (arcs.empty() || !(total > 0.0)) return dist;
  dist.reserve(arcs.size());
  for (const auto& a : arcs) dist.emplace_back(a.target, a.magnitude / total);
  return dist;
}

namespace {

Walk walk_from(const WalkGraph& graph, NodeIndex start, int length, Rng& rng) {
  Walk walk;
  walk.reserve(length);
  walk.push_back(start);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NodeIndex current = start;
  while (static_cast<int>(walk.size()) < length) {
    const auto arcs = graph.out_arcs(current);
    if (arcs.empty()) break;
    double total = 0.0;
    for (const auto& a : arcs) total += a.magnitude;
    double pick = unit(rng) * total;
    std::size_t k = 0;
    for (; k + 1 < arcs.size(); ++k) {
      pick -= arcs[k].magnitude;
      if (pick < 0.0) break;
    }
    current = arcs[k].target;
    walk.push_back(current);
  }
  return walk;
}

}  // namespace

std::vector<Walk> generate_walks(const WalkGraph& graph, const WalkConfig& cfg) {
  cfg.validate();
  std::vector<Walk> walks;
  if (graph.edge_count() == 0) return walks;
  for (NodeIndex start : graph.nodes()) {
    if (graph.is_isolated(start)) continue;
    for (int xi = 0; xi < cfg.num_walks; ++xi) {
      Rng rng(derive_seed(cfg.seed, {start, static_cast<std::uint64_t>(xi)}));
      walks.push_back(walk_from(graph, start, cfg.walk_length, rng));
    }
  }
  return walks;
}

Eigen::MatrixXd train_skipgram(const std::vector<Walk>& walks, const SkipGramConfig& cfg,
                               std::span<const NodeIndex> universe) {
  cfg.validate();
  const auto n_rows = static_cast<Eigen::Index>(universe.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_rows, cfg.dim);

  auto row_of = [&](NodeIndex node) {
    auto it = std::lower_bound(universe.begin(), universe.end(), node);
    if (it == universe.end() || *it != node) {
      throw ArgumentError("walk node " + std::to_string(node) + " missing from node universe");
    }
    return static_cast<int>(it - universe.begin());
  };

  // Vocabulary: universe rows that occur in the corpus.
  std::vector<std::vector<int>> corpus;
  corpus.reserve(walks.size());
  std::vector<double> counts(universe.size(), 0.0);
  std::size_t tokens = 0;
  for (const auto& w : walks) {
    std::vector<int> rows;
    rows.reserve(w.size());
    for (NodeIndex v : w) {
      rows.push_back(row_of(v));
      counts[rows.back()] += 1.0;
    }
    tokens += rows.size();
    corpus.push_back(std::move(rows));
  }
  if (tokens == 0) return out;

  std::vector<int> vocab;
  std::vector<double> noise_weights;
  for (int r = 0; r < static_cast<int>(counts.size()); ++r) {
    if (counts[r] > 0.0) {
      vocab.push_back(r);
      noise_weights.push_back(std::pow(counts[r], 0.75));
    }
  }

  const int d = cfg.dim;
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> init(-0.5 / d, 0.5 / d);
  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(d, n_rows);  // column per node
  Eigen::MatrixXd context = Eigen::MatrixXd::Zero(d, n_rows);
  for (int r : vocab) {
    for (int k = 0; k < d; ++k) input(k, r) = init(rng);
  }

  std::discrete_distribution<int> noise(noise_weights.begin(), noise_weights.end());
  std::uniform_int_distribution<int> shrink(0, cfg.context_window - 1);
  const double total_steps = static_cast<double>(tokens) * cfg.epochs + 1.0;
  double processed = 0.0;
  Eigen::VectorXd grad_in(d);

  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : corpus) {
      const int len = static_cast<int>(walk.size());
      for (int i = 0; i < len; ++i, processed += 1.0) {
        const double lr = cfg.initial_lr * std::max(1.0 - processed / total_steps, 1e-4);
        const int center = walk[i];
        const int reach = cfg.context_window - shrink(rng);
        for (int j = std::max(0, i - reach); j <= std::min(len - 1, i + reach); ++j) {
          if (j == i) continue;
          const int target = walk[j];
          grad_in.setZero();
          for (int s = 0; s <= cfg.negatives; ++s) {
            int sample = target;
            double label = 1.0;
            if (s > 0) {
              sample = vocab[noise(rng)];
              if (sample == target) continue;
              label = 0.0;
            }
            const double score = sigmoid(input.col(center).dot(context.col(sample)));
            const double g = (label - score) * lr;
            grad_in.noalias() += g * context.col(sample);
            context.col(sample).noalias() += g * input.col(center);
          }
          input.col(center) += grad_in;
        }
      }
    }
  }

  for (int r : vocab) out.row(r) = input.col(r).transpose();
  return out;
}

std::optional<Eigen::Index> SemanticEmbedding::row_index(NodeIndex node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) return std::nullopt;
  return static_cast<Eigen::Index>(it - nodes.begin());
}

Eigen::VectorXd SemanticEmbedding::row(NodeIndex node) const {
  if (auto r = row_index(node)) return matrix.row(*r).transpose();
  return Eigen::VectorXd::Zero(matrix.cols());
}

SemanticEmbedding window_embedding(const Window& window, const WalkConfig& walk_cfg,
                                   const SkipGramConfig& sg_cfg) {
  const auto parts = signed_subgraphs(window.union_graph);
  const auto& universe = window.nodes();
  const auto t = static_cast<std::uint64_t>(window.target_t);

  auto embed = [&](const Snapshot& sub, SeedStream walk_stream, SeedStream sg_stream) {
    WalkConfig wc = walk_cfg;
    wc.seed = derive_seed(walk_cfg.seed, {stream_id(walk_stream), t});
    SkipGramConfig sc = sg_cfg;
    sc.seed = derive_seed(sg_cfg.seed, {stream_id(sg_stream), t});
    const WalkGraph graph(sub);
    return train_skipgram(generate_walks(graph, wc), sc, universe);
  };

  SemanticEmbedding emb;
  emb.target_t = window.target_t;
  emb.nodes = universe;
  emb.matrix.resize(static_cast<Eigen::Index>(universe.size()), 2 * sg_cfg.dim);
  emb.matrix.leftCols(sg_cfg.dim) =
      embed(parts.positive, SeedStream::kWalkPositive, SeedStream::kSkipGramPositive);
  emb.matrix.rightCols(sg_cfg.dim) =
      embed(parts.negative, SeedStream::kWalkNegative, SeedStream::kSkipGramNegative);
  return emb;
}

std::uint64_t semantic_config_hash(const WalkConfig& w, const SkipGramConfig& s) {
  std::ostringstream key;
  key.precision(17);
  key << "walk:" << w.num_walks << ',' << w.walk_length << ";sg:" << s.dim << ','
      << s.context_window << ',' << s.negatives << ',' << s.epochs << ',' << s.initial_lr;
  return fnv1a(key.str());
}

namespace {
constexpr char kCacheMagic[8] = {'L', 'S', 'W', 'J', 'E', 'M', 'B', '1'};
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path EmbeddingCache::path_for(const std::string& dataset, int target_t,
                                               std::uint64_t seed,
                                               std::uint64_t config_hash) const {
  std::ostringstream name;
  name << "emb_" << (dataset.empty() ? "dataset" : dataset) << "_t" << target_t << "_s" << seed
       << "_" << std::hex << config_hash << ".bin";
  return dir_ / name.str();
}

std::optional<SemanticEmbedding> EmbeddingCache::load(const std::string& dataset, int target_t,
                                                      std::uint64_t seed,
                                                      std::uint64_t config_hash) const {
  std::ifstream in(path_for(dataset, target_t, seed, config_hash), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::int64_t t = 0, rows = 0, cols = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&t), sizeof t);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 || t != target_t || rows < 0 ||
      cols < 0) {
    return std::nullopt;
  }
  SemanticEmbedding emb;
  emb.target_t = target_t;
  emb.nodes.resize(rows);
  emb.matrix.resize(rows, cols);
  in.read(reinterpret_cast<char*>(emb.nodes.data()),
          static_cast<std::streamsize>(rows * sizeof(NodeIndex)));
  // Stored row-major.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(rows * cols * 8));
  if (!in) return std::nullopt;
  emb.matrix = m;
  return emb;
}

void EmbeddingCache::store(const std::string& dataset, std::uint64_t seed,
                           std::uint64_t config_hash, const SemanticEmbedding& emb) const {
  const auto path = path_for(dataset, emb.target_t, seed, config_hash);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding cache " + path.string());
  const std::int64_t t = emb.target_t, rows = emb.matrix.rows(), cols = emb.matrix.cols();
  out.write(kCacheMagic, sizeof kCacheMagic);
  out.write(reinterpret_cast<const char*>(&t), sizeof t);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(emb.nodes.data()),
            static_cast<std::streamsize>(rows * sizeof(NodeIndex)));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m = emb.matrix;
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(rows * cols * 8));
}

}  // namespace lswjp
