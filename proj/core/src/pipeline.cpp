#include "lswjp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "lswjp/errors.hpp"
#include "lswjp/hash.hpp"
#include "lswjp/random.hpp"

namespace lswjp {

TemporalGraph load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ArgumentError("no dataset given");
  const std::filesystem::path path(cfg.dataset);
  return normalize_weights(load_edge_csv(path, cfg.format, path.stem().string()));
}

std::span<const WindowData> PreparedData::train_windows() const {
  return std::span<const WindowData>(data).first(split.train);
}

std::span<const WindowData> PreparedData::test_windows() const {
  return std::span<const WindowData>(data).subspan(split.train);
}

std::uint64_t data_config_hash(const TemporalGraph& graph, const RunConfig& cfg) {
  std::uint64_t h = fnv1a(graph.meta.name);
  auto mix = [&h](std::uint64_t v) { h = mix_seed(h ^ v); };
  mix(graph.nodes.size());
  mix(graph.edges.size());
  for (const auto& e : graph.edges) {
    mix(static_cast<std::uint64_t>(e.source));
    mix(static_cast<std::uint64_t>(e.target));
    mix(std::bit_cast<std::uint64_t>(e.weight));
    mix(std::bit_cast<std::uint64_t>(e.timestamp));
  }
  mix(static_cast<std::uint64_t>(cfg.snapshots));
  mix(static_cast<std::uint64_t>(cfg.window));
  mix(static_cast<std::uint64_t>(cfg.feature.hops));
  mix(static_cast<std::uint64_t>(cfg.feature.baseline));
  mix(semantic_config_hash(cfg.feature.walk, cfg.feature.skipgram));
  mix(cfg.seed);
  return h;
}

PreparedData prepare(const TemporalGraph& graph, const RunConfig& cfg) {
  cfg.validate();
  PreparedData out;
  out.sequence = discretize(graph, cfg.snapshots);
  out.meta = graph.meta;
  out.meta.weight_scale = out.sequence.weight_scale;
  out.windows = make_windows(out.sequence, cfg.window);
  out.split = chronological_split(out.windows.size(), cfg.train.split_ratio);

  std::optional<EmbeddingCache> cache;
  if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);
  // Window contents depend on T and n, so both go into the cache key.
  const std::string key = graph.meta.name + "-T" + std::to_string(cfg.snapshots) + "-n" +
                          std::to_string(cfg.window);
  const int jobs = cfg.deterministic ? 1 : cfg.jobs;
  out.data = build_all_window_data(out.sequence, out.windows, cfg.feature, jobs,
                                   cache ? &*cache : nullptr, key);
  out.data_hash = data_config_hash(graph, cfg);
  return out;
}

MetricReport evaluate_test(const Model& model, const PreparedData& data, const RunConfig& cfg) {
  MetricReport report = evaluate(model, data.test_windows(), data.meta, cfg.seed);
  report.config = config_snapshot(cfg);
  return report;
}

ExperimentResult run_experiment(const PreparedData& data, const RunConfig& cfg,
                                const EpochCallback& on_epoch) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result{train(data.train_windows(), data.meta, cfg.model, cfg.train, on_epoch),
                          {}};
  result.report = evaluate_test(result.training.model, data, cfg);
  result.report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<AblationRow> ablate(const PreparedData& data, const RunConfig& cfg,
                                std::span<const AblationVariant> variants) {
  std::vector<AblationRow> rows;
  for (const auto v : variants) {
    RunConfig c = cfg;
    c.model.variant = v;
    rows.push_back({v, run_experiment(data, c).report});
  }
  return rows;
}

namespace {

void put_metrics(std::ostream& out, const MetricReport& r) {
  auto opt = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  opt(r.auc_link);
  opt(r.auc_sign);
  opt(r.mae);
  opt(r.rmse);
}

}  // namespace

void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows) {
  out.precision(6);
  out << "variant,auc_l,auc_s,mae,rmse\n";
  for (const auto& row : rows) {
    out << display_name(row.variant);
    put_metrics(out, row.report);
    out << '\n';
  }
}

std::vector<SweepPoint> sweep_points(const RunConfig& base) {
  std::vector<SweepPoint> points;
  auto add = [&](const char* param, int value, auto&& edit) {
    RunConfig c = base;
    edit(c, value);
    c.finalize();
    points.push_back({param, value, std::move(c)});
  };
  for (int v : base.grid.window) add("n", v, [](RunConfig& c, int x) { c.window = x; });
  for (int v : base.grid.hops) add("h", v, [](RunConfig& c, int x) { c.feature.hops = x; });
  for (int v : base.grid.snapshots) add("T", v, [](RunConfig& c, int x) { c.snapshots = x; });
  return points;
}

std::vector<SweepRecord> sweep(const TemporalGraph& graph, const RunConfig& base,
                               const SweepProgress& progress) {
  const auto points = sweep_points(base);
  std::vector<SweepRecord> records(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto run_point = [&](std::size_t i) {
    const auto& p = points[i];
    SweepRecord rec{p.param, p.value, std::nullopt, {}};
    if (p.config.snapshots <= p.config.window) {
      rec.skipped = "T <= n";
    } else {
      RunConfig c = p.config;
      c.jobs = 1;
      const PreparedData data = prepare(graph, c);
      rec.report = run_experiment(data, c).report;
    }
    std::lock_guard lock(mu);
    records[i] = rec;
    if (progress) progress(rec);
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        run_point(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads =
      base.deterministic ? 1 : std::clamp(base.jobs, 1, std::max(1, static_cast<int>(points.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
  out.precision(6);
  out << "param,value,auc_l,auc_s,mae,rmse\n";
  for (const auto& r : records) {
    out << r.param << ',' << r.value;
    if (r.report) {
      put_metrics(out, *r.report);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

}  // namespace lswjp
