#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lswjp/features.hpp"
#include "lswjp/graph.hpp"
#include "lswjp/model.hpp"
#include "lswjp/training.hpp"

namespace lswjp {

struct SweepGrid {
  std::vector<int> window{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> hops{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> snapshots{100, 110, 120, 130, 140, 150, 160, 170, 180, 190, 200};
};

// Everything needed to reproduce a run. Serialized as one flat JSON object
// whose keys double as `--kebab-case` flags.
struct RunConfig {
  std::string dataset;
  EdgeFormat format = EdgeFormat::kCsv;
  std::string out = "runs";
  std::string checkpoint;
  std::string cache_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool deterministic = false;

  int snapshots = 100;  // T
  int window = 10;      // n
  FeatureConfig feature;
  ModelConfig model;
  TrainConfig train;
  SweepGrid grid;

  // Pushes shared values (seed, window length, widths, determinism) into the
  // module configs. Idempotent.
  void finalize();
  void validate() const;
};

enum class SettingKind { kBool, kInt, kReal, kText, kIntList };

struct SettingInfo {
  std::string key;
  SettingKind kind;
  std::string help;
};

const std::vector<SettingInfo>& run_settings();

// `value` is JSON text or a bare string; lists may also be given as "1,2,3".
// Throws ArgumentError for unknown keys or ill-typed values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

std::string to_json_text(const RunConfig& cfg);
// Applies every key of a JSON object on top of `cfg`.
void merge_json_text(RunConfig& cfg, std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// key -> JSON-encoded value, for report headers.
std::map<std::string, std::string> config_snapshot(const RunConfig& cfg);

}  // namespace lswjp
