#include "lswjp/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "lswjp/errors.hpp"
#include "lswjp/random.hpp"

namespace lswjp {

void FeatureConfig::validate() const {
  walk.validate();
  skipgram.validate();
  if (hops < 1) throw ArgumentError("hop count h must be positive");
}

namespace {

nn::Matrix flatten(const std::vector<Eigen::MatrixXd>& per_step, int rows, int width) {
  const int steps = static_cast<int>(per_step.size());
  nn::Matrix flat(static_cast<Eigen::Index>(rows) * steps, width);
  for (int r = 0; r < rows; ++r) {
    for (int tau = 0; tau < steps; ++tau) {
      flat.row(static_cast<Eigen::Index>(r) * steps + tau) = per_step[tau].row(r);
    }
  }
  return flat;
}

}  // namespace

WindowData build_window_data(const Window& window, const Snapshot& target,
                             const FeatureConfig& cfg, const EmbeddingCache* cache,
                             const std::string& dataset) {
  cfg.validate();
  WindowData data;
  data.target_t = window.target_t;
  data.steps = window.length();
  data.target = target;

  std::vector<NodeIndex> pool = window.nodes();
  pool.insert(pool.end(), target.nodes.begin(), target.nodes.end());
  data.nodes = NodeIndexMap(std::move(pool));

  std::optional<SemanticEmbedding> emb;
  const auto hash = semantic_config_hash(cfg.walk, cfg.skipgram);
  const auto seed = derive_seed(cfg.walk.seed, {cfg.skipgram.seed});
  if (cache != nullptr) emb = cache->load(dataset, window.target_t, seed, hash);
  if (!emb) {
    emb = window_embedding(window, cfg.walk, cfg.skipgram);
    if (cache != nullptr) cache->store(dataset, seed, hash, *emb);
  }
  data.semantic = nn::Matrix::Zero(data.nodes.size(), cfg.semantic_width());
  for (int r = 0; r < data.nodes.size(); ++r) {
    if (auto row = emb->row_index(data.nodes.global(r))) data.semantic.row(r) = emb->matrix.row(*row);
  }

  data.structural = flatten(structural_block(window, cfg.hops, data.nodes, cfg.baseline),
                            data.nodes.size(), kStructuralWidth);
  data.simple = flatten(simple_sign_block(window, data.nodes), data.nodes.size(), kSimpleSignWidth);
  return data;
}

std::vector<WindowData> build_all_window_data(const SnapshotSequence& sequence,
                                              const std::vector<Window>& windows,
                                              const FeatureConfig& cfg, int jobs,
                                              const EmbeddingCache* cache,
                                              const std::string& dataset) {
  std::vector<WindowData> out(windows.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < windows.size(); i = next++) {
      try {
        const auto& w = windows[i];
        out[i] = build_window_data(w, sequence.snapshots.at(w.target_t), cfg, cache, dataset);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, static_cast<int>(windows.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

nn::Matrix compress_structural(const nn::Matrix& raw) {
  return raw.unaryExpr([](double x) { return std::copysign(std::log1p(std::abs(x)), x); });
}

ModelInput make_model_input(const WindowData& data, const ModelConfig& cfg,
                            std::span<const std::pair<NodeIndex, NodeIndex>> pairs) {
  std::vector<int> rows;
  rows.reserve(pairs.size() * 2);
  for (const auto& [s, t] : pairs) {
    rows.push_back(data.nodes.at(s));
    rows.push_back(data.nodes.at(t));
  }
  std::vector<int> unique_rows = rows;
  std::sort(unique_rows.begin(), unique_rows.end());
  unique_rows.erase(std::unique(unique_rows.begin(), unique_rows.end()), unique_rows.end());

  const int steps = data.steps;
  const bool simple = cfg.variant == AblationVariant::kNoFeature;
  const nn::Matrix& source = simple ? data.simple : data.structural;
  if (data.semantic.cols() != cfg.semantic_in) {
    throw ShapeError("semantic feature width " + std::to_string(data.semantic.cols()) +
                     " does not match model input " + std::to_string(cfg.semantic_in));
  }

  ModelInput in;
  in.steps = steps;
  const auto m = static_cast<Eigen::Index>(unique_rows.size());
  in.semantic.resize(m, data.semantic.cols());
  in.structural.resize(m * steps, source.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    const int r = unique_rows[static_cast<std::size_t>(k)];
    in.semantic.row(k) = data.semantic.row(r);
    in.structural.middleRows(k * steps, steps) =
        source.middleRows(static_cast<Eigen::Index>(r) * steps, steps);
  }
  in.structural = compress_structural(in.structural);

  auto local = [&](int r) {
    return static_cast<int>(std::lower_bound(unique_rows.begin(), unique_rows.end(), r) -
                            unique_rows.begin());
  };
  in.pairs.reserve(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    in.pairs.emplace_back(local(rows[2 * e]), local(rows[2 * e + 1]));
  }
  return in;
}

}  // namespace lswjp
