#include "lswjp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "lswjp/errors.hpp"
#include "lswjp/random.hpp"
#include "lswjp/training.hpp"

namespace lswjp {

std::optional<double> auc(std::span<const ScoredLabel> samples) {
  std::vector<ScoredLabel> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  double pos = 0.0;
  double neg = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
    // Average 1-based rank of the tie block.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].label == 1) {
        pos += 1.0;
        rank_sum += avg_rank;
      } else {
        neg += 1.0;
      }
    }
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw ArgumentError("metric input is empty");
  if (a.size() != b.size()) throw ArgumentError("metric inputs differ in length");
}

}  // namespace

double mae(std::span<const double> truth, std::span<const double> predicted) {
  check_pair(truth, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - predicted[i]);
  return s / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
  check_pair(truth, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predicted[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

namespace {

struct Scored {
  std::vector<ScoredLabel> link;
  std::vector<ScoredLabel> sign;
  std::vector<double> weight_truth;
  std::vector<double> weight_pred;
};

Scored score_window(const Model& model, const WindowData& w, const DatasetMeta* meta,
                    std::uint64_t seed) {
  Scored out;
  const auto window_seed = derive_seed(seed, {static_cast<std::uint64_t>(w.target_t)});
  const EdgeBatch batch = make_batch(w, window_seed);
  if (meta != nullptr) warn_short_negatives(batch, w.target_t);  // validation stays quiet
  if (batch.positives.empty()) return out;
  const auto candidates = batch.candidates();
  const Predictions preds = model.predict(make_model_input(w, model.config(), candidates));
  const nn::Vector link = preds.link_prob();
  const std::size_t n_pos = batch.positives.size();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    out.link.push_back({link[static_cast<Eigen::Index>(k)], k < n_pos ? 1 : 0});
  }
  if (meta == nullptr) return out;
  const nn::Vector sign = preds.sign_prob();
  for (std::size_t k = 0; k < n_pos; ++k) {
    const auto idx = static_cast<Eigen::Index>(k);
    const auto& e = batch.positives[k];
    if (meta->is_signed) out.sign.push_back({sign[idx], e.sign > 0 ? 1 : 0});
    if (meta->is_weighted) {
      out.weight_truth.push_back(e.weight);
      out.weight_pred.push_back(preds.weight[idx]);
    }
  }
  return out;
}

template <typename T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

MetricReport evaluate(const Model& model, std::span<const WindowData> windows,
                      const DatasetMeta& meta, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto stream = derive_seed(seed, {stream_id(SeedStream::kEvalNegatives)});
  MetricReport report;
  Scored pooled;
  for (const auto& w : windows) {
    const Scored s = score_window(model, w, &meta, stream);
    WindowMetrics wm;
    wm.target_t = w.target_t;
    wm.positives = static_cast<std::size_t>(
        std::count_if(s.link.begin(), s.link.end(), [](const auto& x) { return x.label == 1; }));
    wm.negatives = s.link.size() - wm.positives;
    wm.auc_link = auc(s.link);
    wm.auc_sign = auc(s.sign);
    if (!s.weight_truth.empty()) {
      wm.mae = mae(s.weight_truth, s.weight_pred);
      wm.rmse = rmse(s.weight_truth, s.weight_pred);
    }
    report.windows.push_back(wm);
    append(pooled.link, s.link);
    append(pooled.sign, s.sign);
    append(pooled.weight_truth, s.weight_truth);
    append(pooled.weight_pred, s.weight_pred);
  }
  report.auc_link = auc(pooled.link);
  if (meta.is_signed) report.auc_sign = auc(pooled.sign);
  if (meta.is_weighted && !pooled.weight_truth.empty()) {
    report.mae = mae(pooled.weight_truth, pooled.weight_pred);
    report.rmse = rmse(pooled.weight_truth, pooled.weight_pred);
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::optional<double> link_auc(const Model& model, std::span<const WindowData> windows,
                               std::uint64_t seed) {
  std::vector<ScoredLabel> pooled;
  for (const auto& w : windows) append(pooled, score_window(model, w, nullptr, seed).link);
  return auc(pooled);
}

namespace {

void put(std::ostream& out, const char* key, const std::optional<double>& v) {
  out << key << ',';
  if (v) out << *v;
  out << '\n';
}

}  // namespace

void write_report(std::ostream& out, const MetricReport& report) {
  out.precision(10);
  out << "metric,value\n";
  put(out, "auc_l", report.auc_link);
  put(out, "auc_s", report.auc_sign);
  put(out, "mae", report.mae);
  put(out, "rmse", report.rmse);
  out << "runtime_seconds," << report.runtime_seconds << '\n';
  out << "\nwindow_t,positives,negatives,auc_l,auc_s,mae,rmse\n";
  auto opt = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  for (const auto& w : report.windows) {
    out << w.target_t << ',' << w.positives << ',' << w.negatives;
    opt(w.auc_link);
    opt(w.auc_sign);
    opt(w.mae);
    opt(w.rmse);
    out << '\n';
  }
}

}  // namespace lswjp
