#pragma once

#include <span>
#include <vector>

#include "lswjp/graph.hpp"
#include "lswjp/model.hpp"
#include "lswjp/semantic.hpp"
#include "lswjp/structural.hpp"

namespace lswjp {

struct FeatureConfig {
  WalkConfig walk;
  SkipGramConfig skipgram;
  int hops = 2;
  DiffBaseline baseline = DiffBaseline::kZero;

  void validate() const;
  int semantic_width() const { return 2 * skipgram.dim; }
};

// Everything the model needs for one window, plus the snapshot it predicts.
// Feature rows cover the window's nodes together with the target snapshot's
// nodes; that set is also the negative-sampling pool.
struct WindowData {
  int target_t = 0;
  int steps = 0;
  NodeIndexMap nodes;
  nn::Matrix semantic;    // |nodes| x 2d
  nn::Matrix structural;  // (|nodes| * steps) x 8
  nn::Matrix simple;      // (|nodes| * steps) x 2, for the no-feature ablation
  Snapshot target;
};

WindowData build_window_data(const Window& window, const Snapshot& target,
                             const FeatureConfig& cfg, const EmbeddingCache* cache = nullptr,
                             const std::string& dataset = {});

// Builds every window in parallel over `jobs` threads; output order follows
// `windows`. Results do not depend on `jobs`.
std::vector<WindowData> build_all_window_data(const SnapshotSequence& sequence,
                                              const std::vector<Window>& windows,
                                              const FeatureConfig& cfg, int jobs = 1,
                                              const EmbeddingCache* cache = nullptr,
                                              const std::string& dataset = {});

// sign(x) * log(1 + |x|); keeps degree-like features on a unit scale.
nn::Matrix compress_structural(const nn::Matrix& raw);

// Assembles the model input for candidate edges given as global node pairs.
ModelInput make_model_input(const WindowData& data, const ModelConfig& cfg,
                            std::span<const std::pair<NodeIndex, NodeIndex>> pairs);

}  // namespace lswjp
