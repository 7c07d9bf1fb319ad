#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lswjp/features.hpp"
#include "lswjp/graph.hpp"
#include "lswjp/model.hpp"

namespace lswjp {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 1 positive, 0 negative
};

// Probability that a random positive outranks a random negative, ties
// counting one half. Empty when either class is missing.
std::optional<double> auc(std::span<const ScoredLabel> samples);

// Both throw ArgumentError on empty or mismatched input.
double mae(std::span<const double> truth, std::span<const double> predicted);
double rmse(std::span<const double> truth, std::span<const double> predicted);

struct WindowMetrics {
  int target_t = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> auc_link;
  std::optional<double> auc_sign;
  std::optional<double> mae;
  std::optional<double> rmse;
};

struct MetricReport {
  std::optional<double> auc_link;
  std::optional<double> auc_sign;  // absent for unsigned data
  std::optional<double> mae;       // absent for unweighted data
  std::optional<double> rmse;
  std::vector<WindowMetrics> windows;
  std::map<std::string, std::string> config;
  double runtime_seconds = 0.0;
};

// Scores balanced candidates for every window (fresh negatives seeded per
// window), then pools all windows into one set of metrics.
MetricReport evaluate(const Model& model, std::span<const WindowData> windows,
                      const DatasetMeta& meta, std::uint64_t seed);

// Pooled link AUC only; used for early stopping.
std::optional<double> link_auc(const Model& model, std::span<const WindowData> windows,
                               std::uint64_t seed);

// Key-value metrics followed by the per-window CSV table.
void write_report(std::ostream& out, const MetricReport& report);

}  // namespace lswjp
