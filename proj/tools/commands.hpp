#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "lswjp/config.hpp"

namespace lswjp::cli {

// Pass/fail bounds checked against a MetricReport after train or eval.
struct Thresholds {
  std::optional<double> min_auc_link;
  std::optional<double> min_auc_sign;
  std::optional<double> max_mae;
  std::optional<double> max_rmse;

  bool any() const { return min_auc_link || min_auc_sign || max_mae || max_rmse; }
};

// `<out>/<command>-YYYYmmdd-HHMMSS[-k]`, created on construction, with the
// resolved config written to config.json. Messages go to stdout and run.log.
class RunDir {
 public:
  RunDir(const RunConfig& cfg, const std::string& command);

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }
  void log(const std::string& line);

 private:
  std::filesystem::path path_;
  std::ofstream log_;
};

inline constexpr int kExitThreshold = 1;

int cmd_ingest(const RunConfig& cfg);
int cmd_features(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const Thresholds& limits);
int cmd_eval(const RunConfig& cfg, const Thresholds& limits);
int cmd_ablate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

}  // namespace lswjp::cli
