#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lswjp/config.hpp"
#include "lswjp/evaluation.hpp"
#include "lswjp/features.hpp"
#include "lswjp/graph.hpp"
#include "lswjp/training.hpp"

namespace lswjp {

// Loads `cfg.dataset` and normalizes its weights.
TemporalGraph load_dataset(const RunConfig& cfg);

struct PreparedData {
  DatasetMeta meta;  // weight scale reflects discretization for event data
  SnapshotSequence sequence;
  std::vector<Window> windows;
  std::vector<WindowData> data;
  SplitSizes split;
  std::uint64_t data_hash = 0;

  std::span<const WindowData> train_windows() const;
  std::span<const WindowData> test_windows() const;
};

// Identifies the edge data plus every setting that shapes the features.
std::uint64_t data_config_hash(const TemporalGraph& graph, const RunConfig& cfg);

// Discretizes into cfg.snapshots bins, builds cfg.window-length windows and
// their features, and splits them chronologically.
PreparedData prepare(const TemporalGraph& graph, const RunConfig& cfg);

struct ExperimentResult {
  TrainResult training;
  MetricReport report;
};

// Trains cfg.model.variant on the training windows and evaluates on the rest.
ExperimentResult run_experiment(const PreparedData& data, const RunConfig& cfg,
                                const EpochCallback& on_epoch = {});

MetricReport evaluate_test(const Model& model, const PreparedData& data, const RunConfig& cfg);

struct AblationRow {
  AblationVariant variant;
  MetricReport report;
};

std::vector<AblationRow> ablate(const PreparedData& data, const RunConfig& cfg,
                                std::span<const AblationVariant> variants = kAllVariants);

// `variant,auc_l,auc_s,mae,rmse`, one row per variant, display names.
void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows);

struct SweepRecord {
  std::string param;  // "n", "h" or "T"
  int value = 0;
  std::optional<MetricReport> report;
  std::string skipped;  // reason, when report is empty
};

struct SweepPoint {
  std::string param;
  int value = 0;
  RunConfig config;
};

// One factor at a time from `base`, in the order n, h, T.
std::vector<SweepPoint> sweep_points(const RunConfig& base);

using SweepProgress = std::function<void(const SweepRecord&)>;

// Runs every point, up to base.jobs at once. Records follow sweep_points order.
std::vector<SweepRecord> sweep(const TemporalGraph& graph, const RunConfig& base,
                               const SweepProgress& progress = {});

// `param,value,auc_l,auc_s,mae,rmse`; skipped points leave metrics empty.
void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records);

}  // namespace lswjp
