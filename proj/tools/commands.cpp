#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lswjp/checkpoint.hpp"
#include "lswjp/errors.hpp"
#include "lswjp/pipeline.hpp"

namespace lswjp::cli {

namespace fs = std::filesystem;

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return out.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << *v;
  return out.str();
}

std::string metric_line(const MetricReport& r) {
  return "auc_link " + fmt(r.auc_link) + "  auc_sign " + fmt(r.auc_sign) + "  mae " +
         fmt(r.mae) + "  rmse " + fmt(r.rmse);
}

TemporalGraph load_checked(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ArgumentError("--dataset is required");
  if (!fs::is_regular_file(cfg.dataset)) {
    throw ArgumentError("dataset not found: " + cfg.dataset);
  }
  return load_dataset(cfg);
}

int check_thresholds(const MetricReport& r, const Thresholds& limits, RunDir& run) {
  bool ok = true;
  auto expect = [&](const char* name, const std::optional<double>& value,
                    const std::optional<double>& bound, bool lower) {
    if (!bound) return;
    const bool met = value && (lower ? *value >= *bound : *value <= *bound);
    run.log(std::string(met ? "threshold met: " : "threshold NOT met: ") + name + " " +
            fmt(value) + (lower ? " >= " : " <= ") + fmt(bound));
    ok = ok && met;
  };
  expect("auc_link", r.auc_link, limits.min_auc_link, true);
  expect("auc_sign", r.auc_sign, limits.min_auc_sign, true);
  expect("mae", r.mae, limits.max_mae, false);
  expect("rmse", r.rmse, limits.max_rmse, false);
  return ok ? 0 : kExitThreshold;
}

void write_report_file(const RunDir& run, const MetricReport& report) {
  auto out = open_out(run.file("report.txt"));
  write_report(out, report);
}

PreparedData prepare_logged(const TemporalGraph& graph, const RunConfig& cfg, RunDir& run) {
  const auto start = std::chrono::steady_clock::now();
  PreparedData data = prepare(graph, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream msg;
  msg << data.windows.size() << " windows (" << data.split.train << " train, "
      << data.split.test << " test), features in " << std::fixed << std::setprecision(1)
      << secs << "s";
  run.log(msg.str());
  return data;
}

EpochCallback epoch_logger(RunDir& run) {
  return [&run](int epoch, double loss, std::optional<double> val_auc) {
    std::ostringstream msg;
    msg << "epoch " << epoch << "  loss " << std::fixed << std::setprecision(5) << loss
        << "  val_auc " << fmt(val_auc);
    run.log(msg.str());
  };
}

// Best value of each metric along one swept parameter.
void log_trends(RunDir& run, const std::string& param, const std::vector<SweepRecord>& part) {
  auto best = [&](const char* name, auto metric, bool maximize) {
    std::optional<std::pair<double, int>> top;
    for (const auto& r : part) {
      if (!r.report) continue;
      const std::optional<double> v = metric(*r.report);
      if (v && (!top || (maximize ? *v > top->first : *v < top->first))) top.emplace(*v, r.value);
    }
    if (!top) return;
    run.log(std::string(maximize ? "max " : "min ") + name + " over " + param + ": " +
            fmt(top->first) + " at " + param + "=" + std::to_string(top->second));
  };
  best("auc_link", [](const MetricReport& r) { return r.auc_link; }, true);
  best("auc_sign", [](const MetricReport& r) { return r.auc_sign; }, true);
  best("mae", [](const MetricReport& r) { return r.mae; }, false);
  best("rmse", [](const MetricReport& r) { return r.rmse; }, false);
}

}  // namespace

RunDir::RunDir(const RunConfig& cfg, const std::string& command) {
  const fs::path base = fs::path(cfg.out) / (command + "-" + timestamp());
  path_ = base;
  for (int k = 2; fs::exists(path_); ++k) path_ = base.string() + "-" + std::to_string(k);
  std::error_code ec;
  fs::create_directories(path_, ec);
  if (ec) throw DataError("cannot create run directory " + path_.string() + ": " + ec.message());
  open_out(path_ / "config.json") << to_json_text(cfg) << '\n';
  log_ = open_out(path_ / "run.log");
}

void RunDir::log(const std::string& line) {
  std::cout << line << std::endl;
  log_ << line << '\n';
  log_.flush();
}

int cmd_ingest(const RunConfig& cfg) {
  const TemporalGraph graph = load_checked(cfg);
  const DatasetStats stats = dataset_stats(graph);
  const SnapshotSequence seq = discretize(graph, cfg.snapshots);
  const auto windows = make_windows(seq, cfg.window);

  RunDir run(cfg, "ingest");
  std::ostringstream line;
  line << stats.nodes << " nodes, " << stats.edges << " edges, " << stats.positive_edges
       << " positive, " << stats.negative_edges << " negative";
  run.log(line.str());
  if (graph.meta.event_counts) run.log(std::to_string(stats.events) + " events");
  run.log(std::to_string(windows.size()) + " windows");

  auto summary = open_out(run.file("snapshots_summary.csv"));
  summary << "t,nodes,edges,raw_edges,positive,negative\n";
  for (const auto& s : seq.snapshots) {
    std::size_t pos = 0;
    for (const auto& e : s.edges) pos += e.weight > 0.0;
    summary << s.index << ',' << s.node_count() << ',' << s.edges.size() << ','
            << s.raw_edge_count << ',' << pos << ',' << s.edges.size() - pos << '\n';
  }
  auto dump = open_out(run.file("snapshots.csv"));
  write_snapshot_dump(dump, seq, graph);
  auto stats_out = open_out(run.file("stats.txt"));
  stats_out << "nodes," << stats.nodes << "\nedges," << stats.edges << "\npositive,"
            << stats.positive_edges << "\nnegative," << stats.negative_edges << "\nevents,"
            << stats.events << "\nself_loops," << stats.self_loops << "\nrejected_zero_weight,"
            << stats.rejected_zero_weight << "\nbin_width," << seq.bin_width << "\nweight_scale,"
            << seq.weight_scale << "\nwindows," << windows.size() << '\n';
  return 0;
}

int cmd_features(const RunConfig& cfg) {
  const TemporalGraph graph = load_checked(cfg);
  RunDir run(cfg, "features");
  const PreparedData data = prepare_logged(graph, cfg, run);
  const fs::path dir = run.file("features");
  fs::create_directories(dir);
  for (const auto& w : data.data) {
    const auto t = std::to_string(w.target_t);
    Eigen::MatrixXd last(w.nodes.size(), w.structural.cols());
    for (int r = 0; r < w.nodes.size(); ++r) {
      last.row(r) = w.structural.row(static_cast<Eigen::Index>(r) * w.steps + w.steps - 1);
    }
    auto structural = open_out(dir / ("structural_t" + t + ".csv"));
    write_feature_dump(structural, last, w.nodes, graph);

    auto semantic = open_out(dir / ("semantic_t" + t + ".csv"));
    semantic.precision(8);
    for (int r = 0; r < w.nodes.size(); ++r) {
      semantic << graph.nodes[w.nodes.global(r)];
      for (Eigen::Index c = 0; c < w.semantic.cols(); ++c) semantic << ',' << w.semantic(r, c);
      semantic << '\n';
    }
  }
  run.log("wrote features for " + std::to_string(data.data.size()) + " windows to " +
          dir.string());
  return 0;
}

int cmd_train(const RunConfig& cfg, const Thresholds& limits) {
  const TemporalGraph graph = load_checked(cfg);
  RunDir run(cfg, "train");
  const PreparedData data = prepare_logged(graph, cfg, run);
  const ExperimentResult result = run_experiment(data, cfg, epoch_logger(run));

  save_checkpoint(run.file("model.ckpt.json"), result.training.model, data.data_hash);
  auto log = open_out(run.file("train_log.csv"));
  write_train_log(log, result.training.log);
  write_report_file(run, result.report);

  std::ostringstream msg;
  msg << "best epoch " << result.training.best_epoch << " of " << result.training.epochs_run
      << (result.training.stopped_early ? " (early stop)" : "");
  run.log(msg.str());
  run.log("test " + metric_line(result.report));
  run.log("checkpoint " + run.file("model.ckpt.json").string());
  return check_thresholds(result.report, limits, run);
}

int cmd_eval(const RunConfig& cfg, const Thresholds& limits) {
  if (cfg.checkpoint.empty()) throw ArgumentError("eval needs --checkpoint");
  const TemporalGraph graph = load_checked(cfg);
  RunDir run(cfg, "eval");
  const PreparedData data = prepare_logged(graph, cfg, run);
  const Model model = load_checkpoint(fs::path(cfg.checkpoint), data.data_hash);
  const MetricReport report = evaluate_test(model, data, cfg);
  write_report_file(run, report);
  run.log("test " + metric_line(report));
  return check_thresholds(report, limits, run);
}

int cmd_ablate(const RunConfig& cfg) {
  const TemporalGraph graph = load_checked(cfg);
  RunDir run(cfg, "ablate");
  const PreparedData data = prepare_logged(graph, cfg, run);
  std::vector<AblationRow> rows;
  for (const auto v : kAllVariants) {
    RunConfig c = cfg;
    c.model.variant = v;
    run.log(std::string("variant ") + std::string(display_name(v)));
    const auto result = run_experiment(data, c, epoch_logger(run));
    run.log(std::string(display_name(v)) + "  " + metric_line(result.report));
    auto report = open_out(run.file("report_" + std::string(to_string(v)) + ".txt"));
    write_report(report, result.report);
    rows.push_back({v, result.report});
  }
  auto table = open_out(run.file("ablation.csv"));
  write_ablation_table(table, rows);
  write_ablation_table(std::cout, rows);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const TemporalGraph graph = load_checked(cfg);
  RunDir run(cfg, "sweep");
  const auto records = sweep(graph, cfg, [&run](const SweepRecord& r) {
    const std::string head = r.param + "=" + std::to_string(r.value) + "  ";
    run.log(head + (r.report ? metric_line(*r.report) : "skipped: " + r.skipped));
  });
  auto out = open_out(run.file("sweep.csv"));
  write_sweep_csv(out, records);
  for (const char* param : {"n", "h", "T"}) {
    std::vector<SweepRecord> part;
    for (const auto& r : records) {
      if (r.param == param) part.push_back(r);
    }
    if (part.empty()) continue;
    auto csv = open_out(run.file(std::string("sweep_") + param + ".csv"));
    write_sweep_csv(csv, part);
    log_trends(run, param, part);
  }
  run.log("wrote " + run.file("sweep.csv").string());
  return 0;
}

}  // namespace lswjp::cli
