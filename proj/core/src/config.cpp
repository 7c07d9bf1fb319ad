#include "lswjp/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lswjp/errors.hpp"

namespace lswjp {

using nlohmann::json;

void RunConfig::finalize() {
  feature.walk.seed = seed;
  feature.skipgram.seed = seed;
  model.seed = seed;
  model.steps = window;
  model.semantic_in = feature.semantic_width();
  model.structural_in = kStructuralWidth;
  train.seed = seed;
  train.deterministic = deterministic;
}

void RunConfig::validate() const {
  if (snapshots < 1) throw ArgumentError("snapshots (T) must be positive");
  if (window < 1) throw ArgumentError("window (n) must be positive");
  if (jobs < 1) throw ArgumentError("jobs must be positive");
  feature.validate();
  model.validate();
  train.validate();
  if (model.steps != window) throw ArgumentError("model steps must equal the window length");
  for (int v : grid.window) {
    if (v < 1) throw ArgumentError("window grid values must be positive");
  }
  for (int v : grid.hops) {
    if (v < 1) throw ArgumentError("hops grid values must be positive");
  }
  for (int v : grid.snapshots) {
    if (v < 1) throw ArgumentError("snapshots grid values must be positive");
  }
}

namespace {

struct Setting {
  SettingInfo info;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const json& v, const char* want) {
  throw ArgumentError("setting '" + key + "' expects " + want + ", got " + v.dump());
}

bool as_bool(const std::string& key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1)) {
    return v.get<long long>() == 1;
  }
  bad_value(key, v, "a boolean");
}

long long as_int(const std::string& key, const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  bad_value(key, v, "an integer");
}

double as_real(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  bad_value(key, v, "a number");
}

std::string as_text(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  bad_value(key, v, "a string");
}

std::vector<int> as_int_list(const std::string& key, const json& v) {
  if (!v.is_array()) bad_value(key, v, "a list of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(static_cast<int>(as_int(key, x)));
  return out;
}

template <typename T>
Setting int_setting(std::string key, std::string help, T RunConfig::*field) {
  auto k = key;
  return {{std::move(key), SettingKind::kInt, std::move(help)},
          [k, field](RunConfig& c, const json& v) {
            const auto x = as_int(k, v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
              bad_value(k, v, "a 32-bit integer");
            }
            c.*field = static_cast<T>(x);
          },
          [field](const RunConfig& c) { return json(c.*field); }};
}

Setting int_ref(std::string key, std::string help, std::function<int&(RunConfig&)> ref) {
  auto k = key;
  return {{std::move(key), SettingKind::kInt, std::move(help)},
          [k, ref](RunConfig& c, const json& v) { ref(c) = static_cast<int>(as_int(k, v)); },
          [ref](const RunConfig& c) { return json(ref(const_cast<RunConfig&>(c))); }};
}

Setting real_ref(std::string key, std::string help, std::function<double&(RunConfig&)> ref) {
  auto k = key;
  return {{std::move(key), SettingKind::kReal, std::move(help)},
          [k, ref](RunConfig& c, const json& v) { ref(c) = as_real(k, v); },
          [ref](const RunConfig& c) { return json(ref(const_cast<RunConfig&>(c))); }};
}

Setting text_ref(std::string key, std::string help, std::string RunConfig::*field) {
  auto k = key;
  return {{std::move(key), SettingKind::kText, std::move(help)},
          [k, field](RunConfig& c, const json& v) { c.*field = as_text(k, v); },
          [field](const RunConfig& c) { return json(c.*field); }};
}

Setting list_ref(std::string key, std::string help,
                 std::function<std::vector<int>&(RunConfig&)> ref) {
  auto k = key;
  return {{std::move(key), SettingKind::kIntList, std::move(help)},
          [k, ref](RunConfig& c, const json& v) { ref(c) = as_int_list(k, v); },
          [ref](const RunConfig& c) { return json(ref(const_cast<RunConfig&>(c))); }};
}

const std::vector<Setting>& table() {
  static const std::vector<Setting> settings = [] {
    std::vector<Setting> s;
    s.push_back(text_ref("dataset", "edge list path", &RunConfig::dataset));
    s.push_back({{"format", SettingKind::kText, "edge list format: csv or events"},
                 [](RunConfig& c, const json& v) {
                   const auto f = parse_edge_format(as_text("format", v));
                   if (!f) bad_value("format", v, "csv or events");
                   c.format = *f;
                 },
                 [](const RunConfig& c) { return json(std::string(to_string(c.format))); }});
    s.push_back(text_ref("out", "directory that receives run directories", &RunConfig::out));
    s.push_back(text_ref("checkpoint", "model checkpoint path", &RunConfig::checkpoint));
    s.push_back(text_ref("cache-dir", "embedding cache directory (empty disables)",
                         &RunConfig::cache_dir));
    s.push_back({{"seed", SettingKind::kInt, "base random seed"},
                 [](RunConfig& c, const json& v) {
                   if (v.is_number_unsigned()) {
                     c.seed = v.get<std::uint64_t>();
                   } else {
                     const auto x = as_int("seed", v);
                     if (x < 0) bad_value("seed", v, "a non-negative integer");
                     c.seed = static_cast<std::uint64_t>(x);
                   }
                 },
                 [](const RunConfig& c) { return json(c.seed); }});
    s.push_back(int_setting("jobs", "worker threads for features and sweeps", &RunConfig::jobs));
    s.push_back({{"deterministic", SettingKind::kBool, "single-threaded, dropout off"},
                 [](RunConfig& c, const json& v) { c.deterministic = as_bool("deterministic", v); },
                 [](const RunConfig& c) { return json(c.deterministic); }});

    s.push_back(int_setting("snapshots", "number of time bins T", &RunConfig::snapshots));
    s.push_back(int_setting("window", "history window length n", &RunConfig::window));
    s.push_back(int_ref("hops", "propagation depth h",
                        [](RunConfig& c) -> int& { return c.feature.hops; }));
    s.push_back({{"diff-baseline", SettingKind::kText,
                  "first-step degree diff reference: zero or preceding"},
                 [](RunConfig& c, const json& v) {
                   const auto t = as_text("diff-baseline", v);
                   if (t == "zero") {
                     c.feature.baseline = DiffBaseline::kZero;
                   } else if (t == "preceding") {
                     c.feature.baseline = DiffBaseline::kPreceding;
                   } else {
                     bad_value("diff-baseline", v, "zero or preceding");
                   }
                 },
                 [](const RunConfig& c) {
                   return json(c.feature.baseline == DiffBaseline::kZero ? "zero" : "preceding");
                 }});
    s.push_back(int_ref("num-walks", "walks per start node",
                        [](RunConfig& c) -> int& { return c.feature.walk.num_walks; }));
    s.push_back(int_ref("walk-length", "nodes per walk",
                        [](RunConfig& c) -> int& { return c.feature.walk.walk_length; }));
    s.push_back(int_ref("embedding-dim", "skip-gram dimension per sign",
                        [](RunConfig& c) -> int& { return c.feature.skipgram.dim; }));
    s.push_back(int_ref("context-window", "skip-gram context radius",
                        [](RunConfig& c) -> int& { return c.feature.skipgram.context_window; }));
    s.push_back(int_ref("sg-negatives", "skip-gram negatives per context pair",
                        [](RunConfig& c) -> int& { return c.feature.skipgram.negatives; }));
    s.push_back(int_ref("sg-epochs", "skip-gram passes over the walks",
                        [](RunConfig& c) -> int& { return c.feature.skipgram.epochs; }));
    s.push_back(real_ref("sg-lr", "skip-gram initial learning rate",
                         [](RunConfig& c) -> double& { return c.feature.skipgram.initial_lr; }));

    s.push_back(int_ref("d-model", "hidden width",
                        [](RunConfig& c) -> int& { return c.model.d_model; }));
    s.push_back(int_ref("layers", "transformer layers",
                        [](RunConfig& c) -> int& { return c.model.transformer_layers; }));
    s.push_back(int_ref("heads", "attention heads",
                        [](RunConfig& c) -> int& { return c.model.attention_heads; }));
    s.push_back(int_ref("mlp-hidden", "spatial MLP hidden width",
                        [](RunConfig& c) -> int& { return c.model.mlp_hidden; }));
    s.push_back(int_ref("ffn-hidden", "transformer feed-forward width",
                        [](RunConfig& c) -> int& { return c.model.ffn_hidden; }));
    s.push_back(int_ref("pool-hidden", "attention pooling width",
                        [](RunConfig& c) -> int& { return c.model.pool_hidden; }));
    s.push_back(int_ref("head-hidden", "prediction head hidden width",
                        [](RunConfig& c) -> int& { return c.model.head_hidden; }));
    s.push_back(real_ref("dropout", "transformer dropout rate",
                         [](RunConfig& c) -> double& { return c.model.dropout; }));
    s.push_back({{"variant", SettingKind::kText,
                  "full, no_transformer, no_embedding, no_feature or no_decoupling"},
                 [](RunConfig& c, const json& v) {
                   const auto t = as_text("variant", v);
                   const auto parsed = parse_variant(t);
                   if (!parsed) bad_value("variant", v, "a known ablation variant");
                   c.model.variant = *parsed;
                 },
                 [](const RunConfig& c) { return json(std::string(to_string(c.model.variant))); }});

    s.push_back(real_ref("lr", "Adam learning rate",
                         [](RunConfig& c) -> double& { return c.train.lr; }));
    s.push_back(int_ref("epochs", "maximum training epochs",
                        [](RunConfig& c) -> int& { return c.train.epochs; }));
    s.push_back(int_ref("patience", "early-stopping patience in epochs",
                        [](RunConfig& c) -> int& { return c.train.patience; }));
    s.push_back(real_ref("split-ratio", "fraction of windows used for training",
                         [](RunConfig& c) -> double& { return c.train.split_ratio; }));
    s.push_back(real_ref("validation-fraction", "tail of training windows held out",
                         [](RunConfig& c) -> double& { return c.train.validation_fraction; }));
    s.push_back(real_ref("loss-link", "link loss weight",
                         [](RunConfig& c) -> double& { return c.train.loss_weights.link; }));
    s.push_back(real_ref("loss-sign", "sign loss weight",
                         [](RunConfig& c) -> double& { return c.train.loss_weights.sign; }));
    s.push_back(real_ref("loss-weight", "weight loss weight",
                         [](RunConfig& c) -> double& { return c.train.loss_weights.weight; }));

    s.push_back(list_ref("window-grid", "sweep values for n",
                         [](RunConfig& c) -> std::vector<int>& { return c.grid.window; }));
    s.push_back(list_ref("hops-grid", "sweep values for h",
                         [](RunConfig& c) -> std::vector<int>& { return c.grid.hops; }));
    s.push_back(list_ref("snapshots-grid", "sweep values for T",
                         [](RunConfig& c) -> std::vector<int>& { return c.grid.snapshots; }));
    return s;
  }();
  return settings;
}

const Setting& find(std::string_view key) {
  for (const auto& s : table()) {
    if (s.info.key == key) return s;
  }
  throw ArgumentError("unknown setting '" + std::string(key) + "'");
}

json parse_value(const Setting& s, std::string_view text) {
  if (s.info.kind == SettingKind::kText) return json(std::string(text));
  json v = json::parse(text, nullptr, false);
  if (!v.is_discarded()) {
    if (s.info.kind == SettingKind::kIntList && v.is_number()) return json::array({v});
    return v;
  }
  if (s.info.kind == SettingKind::kIntList) {
    json list = json::array();
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
      json x = json::parse(item, nullptr, false);
      if (x.is_discarded()) throw ArgumentError("setting '" + s.info.key + "': bad list item '" + item + "'");
      list.push_back(x);
    }
    return list;
  }
  throw ArgumentError("setting '" + s.info.key + "': cannot parse '" + std::string(text) + "'");
}

}  // namespace

const std::vector<SettingInfo>& run_settings() {
  static const std::vector<SettingInfo> infos = [] {
    std::vector<SettingInfo> out;
    for (const auto& s : table()) out.push_back(s.info);
    return out;
  }();
  return infos;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& s = find(key);
  s.set(cfg, parse_value(s, value));
}

std::string to_json_text(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& s : table()) out[s.info.key] = s.get(cfg);
  return out.dump(2) + "\n";
}

std::map<std::string, std::string> config_snapshot(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& s : table()) out[s.info.key] = s.get(cfg).dump();
  return out;
}

void merge_json_text(RunConfig& cfg, std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ArgumentError("config must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) find(key).set(cfg, value);
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  merge_json_text(base, buffer.str());
  return base;
}

}  // namespace lswjp
