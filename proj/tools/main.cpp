#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lswjp/errors.hpp"

namespace {

using lswjp::RunConfig;
using lswjp::SettingKind;

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumerical = 4 };

// Short spellings for the three swept hyperparameters.
const std::map<std::string, std::string> kAliases{{"snapshots", "T"}, {"window", "n"}, {"hops", "h"}};

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;  // key -> raw flag text
  std::vector<std::pair<std::string, CLI::Option*>> options;
  lswjp::cli::Thresholds limits;
};

const char* type_name(SettingKind kind) {
  switch (kind) {
    case SettingKind::kInt: return "INT";
    case SettingKind::kReal: return "FLOAT";
    case SettingKind::kIntList: return "INT,...";
    default: return "TEXT";
  }
}

void add_settings(Subcommand& sub, bool thresholds) {
  sub.app->add_option("--config", sub.config_path, "JSON config file; flags override it")
      ->check(CLI::ExistingFile);
  for (const auto& s : lswjp::run_settings()) {
    auto& slot = sub.values[s.key];
    CLI::Option* opt = nullptr;
    if (s.kind == SettingKind::kBool) {
      opt = sub.app->add_flag("--" + s.key + "{true}", slot, s.help);
    } else {
      opt = sub.app->add_option("--" + s.key, slot, s.help)->type_name(type_name(s.kind));
    }
    sub.options.emplace_back(s.key, opt);
    if (auto it = kAliases.find(s.key); it != kAliases.end()) {
      auto* alias = sub.app->add_option("--" + it->second, slot, "same as --" + s.key)
                        ->type_name(type_name(s.kind));
      alias->excludes(opt);
      sub.options.emplace_back(s.key, alias);
    }
  }
  if (thresholds) {
    auto& l = sub.limits;
    sub.app->add_option("--min-auc-link", l.min_auc_link, "fail (exit 1) below this link AUC");
    sub.app->add_option("--min-auc-sign", l.min_auc_sign, "fail (exit 1) below this sign AUC");
    sub.app->add_option("--max-mae", l.max_mae, "fail (exit 1) above this MAE");
    sub.app->add_option("--max-rmse", l.max_rmse, "fail (exit 1) above this RMSE");
  }
}

RunConfig resolve(const Subcommand& sub) {
  RunConfig cfg;
  if (!sub.config_path.empty()) cfg = lswjp::load_run_config(sub.config_path);
  for (const auto& [key, opt] : sub.options) {
    if (opt->count() > 0) lswjp::apply_setting(cfg, key, sub.values.at(key));
  }
  cfg.finalize();
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link, sign and weight prediction on dynamic signed networks"};
  app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    bool thresholds;
  };
  const std::vector<Entry> entries{
      {"ingest", "load a dataset, print its statistics and the snapshot summary", false},
      {"features", "compute and dump per-window semantic and structural features", false},
      {"train", "train a model and evaluate it on the test windows", true},
      {"eval", "evaluate a saved checkpoint on the test windows", true},
      {"ablate", "train and evaluate all five model variants", false},
      {"sweep", "one-factor-at-a-time sweep over n, h and T", false},
  };
  std::map<std::string, Subcommand> subs;
  for (const auto& e : entries) {
    auto& sub = subs[e.name];
    sub.app = app.add_subcommand(e.name, e.help);
    add_settings(sub, e.thresholds);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      const RunConfig cfg = resolve(sub);
      if (name == "ingest") return lswjp::cli::cmd_ingest(cfg);
      if (name == "features") return lswjp::cli::cmd_features(cfg);
      if (name == "train") return lswjp::cli::cmd_train(cfg, sub.limits);
      if (name == "eval") return lswjp::cli::cmd_eval(cfg, sub.limits);
      if (name == "ablate") return lswjp::cli::cmd_ablate(cfg);
      if (name == "sweep") return lswjp::cli::cmd_sweep(cfg);
    }
  } catch (const lswjp::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const lswjp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const lswjp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
