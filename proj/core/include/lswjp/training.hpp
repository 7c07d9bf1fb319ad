#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lswjp/features.hpp"
#include "lswjp/graph.hpp"
#include "lswjp/model.hpp"

namespace lswjp {

struct LossWeights {
  double link = 1.0;
  double sign = 1.0;
  double weight = 1.0;
};

struct TrainConfig {
  double lr = 0.001;
  int epochs = 100;
  int patience = 10;  // epochs without validation link-AUC improvement
  double split_ratio = 0.8;
  double validation_fraction = 0.1;  // tail of the training windows
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  bool deterministic = false;  // disables dropout

  void validate() const;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
};

// First ceil(ratio * count) windows train, the rest test; both sides keep at
// least one window.
SplitSizes chronological_split(std::size_t count, double ratio);

template <typename T>
std::pair<std::span<const T>, std::span<const T>> chronological_split(std::span<const T> items,
                                                                       double ratio) {
  const auto sizes = chronological_split(items.size(), ratio);
  return {items.first(sizes.train), items.subspan(sizes.train)};
}

using NodePair = std::pair<NodeIndex, NodeIndex>;

struct NegativeSample {
  std::vector<NodePair> pairs;
  bool exhausted = false;  // fewer admissible pairs than requested
};

// Distinct ordered pairs (i, j), i != j, drawn uniformly from `pool` x `pool`
// among pairs that are not edges of `target`.
NegativeSample sample_negatives(const Snapshot& target, std::size_t count,
                                std::span<const NodeIndex> pool, std::uint64_t seed);

struct LabeledEdge {
  NodeIndex source = 0;
  NodeIndex target = 0;
  int sign = 1;
  double weight = 0.0;  // normalized
};

struct EdgeBatch {
  std::vector<LabeledEdge> positives;
  std::vector<NodePair> negatives;
  bool negatives_short = false;  // fewer negatives than positives were available

  // Candidate list in model order: positives first, then negatives.
  std::vector<NodePair> candidates() const;
};

// Positives are the target snapshot's edges; negatives are sampled 1:1.
EdgeBatch make_batch(const WindowData& data, std::uint64_t seed);

// Logs to std::clog when `batch` could not be balanced.
void warn_short_negatives(const EdgeBatch& batch, int target_t);

struct LossBreakdown {
  double total = 0.0;
  double link = 0.0;
  double sign = 0.0;
  double weight = 0.0;
  bool sign_active = false;
  bool weight_active = false;
};

struct LossResult {
  LossBreakdown loss;
  OutputGradients gradients;
};

// BCE on link existence over positives and negatives, BCE on sign and MSE on
// normalized weight over positives only. Sign and weight terms drop out for
// unsigned and unweighted datasets. Each term is a mean over its own samples.
LossResult multitask_loss(const Predictions& preds, const EdgeBatch& batch,
                          const DatasetMeta& meta, const LossWeights& weights);

struct TrainLogRecord {
  int epoch = 0;
  int window_t = 0;
  LossBreakdown loss;
  std::optional<double> val_auc;  // set on the last record of each epoch
};

// `epoch,window_t,loss_total,loss_link,loss_sign,loss_weight,val_auc`
void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log);

struct TrainResult {
  Model model;
  std::vector<TrainLogRecord> log;
  int epochs_run = 0;
  int best_epoch = 0;
  std::optional<double> best_val_auc;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(int epoch, double mean_loss, std::optional<double> val_auc)>;

// Trains on `windows` in target order; the last validation_fraction of them is
// held out for early stopping. Returns the parameters with the best
// validation link-AUC (or the final ones when there is no validation slice).
TrainResult train(std::span<const WindowData> windows, const DatasetMeta& meta,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace lswjp
