#include "lswjp/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "lswjp/errors.hpp"
#include "lswjp/evaluation.hpp"
#include "lswjp/random.hpp"

namespace lswjp {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ArgumentError("learning rate must be positive");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ArgumentError("split ratio must lie strictly between 0 and 1");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ArgumentError("validation fraction must lie in [0, 1)");
  }
  if (loss_weights.link < 0.0 || loss_weights.sign < 0.0 || loss_weights.weight < 0.0) {
    throw ArgumentError("loss weights must be non-negative");
  }
}

SplitSizes chronological_split(std::size_t count, double ratio) {
  if (count < 2) throw DataError("chronological split needs at least 2 windows");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split ratio must lie in (0, 1)");
  // The epsilon keeps 0.8 * 90 from rounding up to 73.
  auto train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(count) - 1e-9));
  train = std::clamp<std::size_t>(train, 1, count - 1);
  return {train, count - train};
}

namespace {

std::uint64_t pack(NodeIndex a, NodeIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

NegativeSample sample_negatives(const Snapshot& target, std::size_t count,
                                std::span<const NodeIndex> pool, std::uint64_t seed) {
  NegativeSample out;
  if (count == 0) return out;
  std::vector<NodeIndex> nodes(pool.begin(), pool.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const std::size_t p = nodes.size();

  auto in_pool = [&](NodeIndex v) { return std::binary_search(nodes.begin(), nodes.end(), v); };
  std::size_t blocked = 0;
  for (const auto& e : target.edges) {
    blocked += e.source != e.target && in_pool(e.source) && in_pool(e.target);
  }
  const std::size_t total = p < 2 ? 0 : p * (p - 1);
  const std::size_t admissible = total - blocked;
  Rng rng(seed);

  if (admissible <= 2 * count) {
    std::vector<NodePair> all;
    all.reserve(admissible);
    for (NodeIndex i : nodes) {
      for (NodeIndex j : nodes) {
        if (i != j && !target.has_edge(i, j)) all.emplace_back(i, j);
      }
    }
    if (all.size() <= count) {
      out.exhausted = all.size() < count;
      out.pairs = std::move(all);
      return out;
    }
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, all.size() - 1);
      std::swap(all[k], all[pick(rng)]);
    }
    all.resize(count);
    out.pairs = std::move(all);
    return out;
  }

  std::uniform_int_distribution<std::size_t> pick(0, p - 1);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  out.pairs.reserve(count);
  while (out.pairs.size() < count) {
    const NodeIndex i = nodes[pick(rng)];
    const NodeIndex j = nodes[pick(rng)];
    if (i == j || target.has_edge(i, j)) continue;
    if (!seen.insert(pack(i, j)).second) continue;
    out.pairs.emplace_back(i, j);
  }
  return out;
}

std::vector<NodePair> EdgeBatch::candidates() const {
  std::vector<NodePair> out;
  out.reserve(positives.size() + negatives.size());
  for (const auto& e : positives) out.emplace_back(e.source, e.target);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

EdgeBatch make_batch(const WindowData& data, std::uint64_t seed) {
  EdgeBatch batch;
  batch.positives.reserve(data.target.edges.size());
  for (const auto& e : data.target.edges) {
    batch.positives.push_back({e.source, e.target, e.weight > 0.0 ? 1 : -1, e.weight});
  }
  auto sample = sample_negatives(data.target, batch.positives.size(), data.nodes.nodes(), seed);
  batch.negatives = std::move(sample.pairs);
  batch.negatives_short = sample.exhausted;
  return batch;
}

void warn_short_negatives(const EdgeBatch& batch, int target_t) {
  if (!batch.negatives_short) return;
  std::clog << "warning: only " << batch.negatives.size() << " admissible negative pairs for "
            << batch.positives.size() << " positives (snapshot " << target_t << ")\n";
}

namespace {

// Numerically stable binary cross-entropy on a logit.
double bce_with_logit(double logit, double label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LossResult multitask_loss(const Predictions& preds, const EdgeBatch& batch,
                          const DatasetMeta& meta, const LossWeights& weights) {
  const std::size_t n_pos = batch.positives.size();
  const std::size_t n_all = n_pos + batch.negatives.size();
  if (static_cast<std::size_t>(preds.size()) != n_all) {
    throw ShapeError("prediction count does not match the batch");
  }
  LossResult r;
  auto& g = r.gradients;
  g.link_logit = nn::Vector::Zero(static_cast<Eigen::Index>(n_all));
  g.sign_logit = nn::Vector::Zero(static_cast<Eigen::Index>(n_all));
  g.weight = nn::Vector::Zero(static_cast<Eigen::Index>(n_all));
  if (n_all == 0) return r;

  for (std::size_t k = 0; k < n_all; ++k) {
    const double label = k < n_pos ? 1.0 : 0.0;
    const double x = preds.link_logit[static_cast<Eigen::Index>(k)];
    r.loss.link += bce_with_logit(x, label);
    g.link_logit[static_cast<Eigen::Index>(k)] = (sigmoid(x) - label) * weights.link / n_all;
  }
  r.loss.link /= static_cast<double>(n_all);

  r.loss.sign_active = meta.is_signed && n_pos > 0;
  r.loss.weight_active = meta.is_weighted && n_pos > 0;
  for (std::size_t k = 0; k < n_pos; ++k) {
    const auto idx = static_cast<Eigen::Index>(k);
    const auto& edge = batch.positives[k];
    if (r.loss.sign_active) {
      const double label = edge.sign > 0 ? 1.0 : 0.0;
      r.loss.sign += bce_with_logit(preds.sign_logit[idx], label);
      g.sign_logit[idx] = (sigmoid(preds.sign_logit[idx]) - label) * weights.sign / n_pos;
    }
    if (r.loss.weight_active) {
      const double err = preds.weight[idx] - edge.weight;
      r.loss.weight += err * err;
      g.weight[idx] = 2.0 * err * weights.weight / n_pos;
    }
  }
  if (n_pos > 0) {
    r.loss.sign /= static_cast<double>(n_pos);
    r.loss.weight /= static_cast<double>(n_pos);
  }
  r.loss.total = weights.link * r.loss.link + weights.sign * r.loss.sign +
                 weights.weight * r.loss.weight;
  return r;
}

void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log) {
  out << "epoch,window_t,loss_total,loss_link,loss_sign,loss_weight,val_auc\n";
  out.precision(10);
  for (const auto& rec : log) {
    out << rec.epoch << ',' << rec.window_t << ',' << rec.loss.total << ',' << rec.loss.link
        << ',' << rec.loss.sign << ',' << rec.loss.weight << ',';
    if (rec.val_auc) out << *rec.val_auc;
    out << '\n';
  }
}

namespace {

void check_finite(const LossBreakdown& loss, int epoch, int window_t) {
  auto fail = [&](const char* term) {
    throw NumericalError("non-finite " + std::string(term) + " loss at epoch " +
                         std::to_string(epoch) + ", window " + std::to_string(window_t));
  };
  if (!std::isfinite(loss.link)) fail("link");
  if (!std::isfinite(loss.sign)) fail("sign");
  if (!std::isfinite(loss.weight)) fail("weight");
  if (!std::isfinite(loss.total)) fail("total");
}

}  // namespace

TrainResult train(std::span<const WindowData> windows, const DatasetMeta& meta,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (windows.empty()) throw DataError("no training windows");

  const std::size_t n = windows.size();
  std::size_t val_count = 0;
  if (n >= 2 && cfg.validation_fraction > 0.0) {
    val_count = static_cast<std::size_t>(std::llround(cfg.validation_fraction * n));
    val_count = std::clamp<std::size_t>(val_count, 1, n - 1);
  }
  const auto fit = windows.first(n - val_count);
  const auto validation = windows.subspan(n - val_count);

  TrainResult result{Model(model_cfg), {}, 0, 0, std::nullopt, false};
  Model& model = result.model;
  nn::Adam adam(model.parameters(), cfg.lr);
  Rng dropout_rng(derive_seed(cfg.seed, {stream_id(SeedStream::kDropout)}));
  Rng* dropout = cfg.deterministic || model_cfg.dropout == 0.0 ? nullptr : &dropout_rng;
  const auto val_seed = derive_seed(cfg.seed, {stream_id(SeedStream::kValidationNegatives)});

  std::optional<Model> best;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    int batches = 0;
    for (const auto& w : fit) {
      const auto seed = derive_seed(cfg.seed, {stream_id(SeedStream::kTrainNegatives),
                                               static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(w.target_t)});
      const EdgeBatch batch = make_batch(w, seed);
      if (epoch == 1) warn_short_negatives(batch, w.target_t);
      if (batch.positives.empty()) continue;
      const auto candidates = batch.candidates();
      const ModelInput input = make_model_input(w, model_cfg, candidates);

      adam.zero_grad();
      const Predictions preds = model.forward(input, dropout);
      const LossResult loss = multitask_loss(preds, batch, meta, cfg.loss_weights);
      check_finite(loss.loss, epoch, w.target_t);
      model.backward(loss.gradients);
      adam.step();

      result.log.push_back({epoch, w.target_t, loss.loss, std::nullopt});
      loss_sum += loss.loss.total;
      ++batches;
    }
    model.release_activations();
    result.epochs_run = epoch;

    std::optional<double> val_auc;
    if (!validation.empty()) val_auc = link_auc(model, validation, val_seed);
    if (!result.log.empty() && result.log.back().epoch == epoch) result.log.back().val_auc = val_auc;
    if (on_epoch) on_epoch(epoch, batches > 0 ? loss_sum / batches : 0.0, val_auc);

    if (val_auc) {
      if (!result.best_val_auc || *val_auc > *result.best_val_auc) {
        result.best_val_auc = val_auc;
        result.best_epoch = epoch;
        best = model;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  if (best) {
    model = std::move(*best);
  } else {
    result.best_epoch = result.epochs_run;
  }
  return result;
}

}  // namespace lswjp
