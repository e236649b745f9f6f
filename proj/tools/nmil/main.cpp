/* Copyright 2026 The NMIL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// nmil: synthetic benchmarks, pretraining, MIL training, ROI extraction,
// grid search and evaluation from one binary.
//
//   nmil <command> [--config FILE] [--seed N] [--jobs N] [--out DIR] [--dry-run]
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure, 1 anything unexpected.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "app.hpp"
#include "config.hpp"
#include "nmil/common/error.hpp"
#include "nmil/common/log.hpp"

namespace {

using nlohmann::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  bool dry_run = false;
  // Command specific string/number flags, keyed by config path.
  std::map<std::string, std::string> strings;
  std::optional<double> threshold;
};

json load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw nmil::ConfigError(path + ": cannot open config file");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw nmil::ConfigError(path + ": invalid JSON (" + e.what() + ")");
  }
}

json resolve(const std::string& command, const Common& o) {
  json cfg = nmil::app::default_config(command);
  if (!o.config_path.empty()) cfg = nmil::app::merge_config(cfg, load_file(o.config_path));
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.jobs) cfg["jobs"] = *o.jobs;
  if (o.out) cfg["out"] = *o.out;
  for (const auto& [key, value] : o.strings) {
    if (value.empty()) continue;
    const json::json_pointer ptr("/" + key);
    cfg[ptr] = value;
  }
  if (o.threshold) cfg["threshold"] = *o.threshold;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  nmil::init_logging();
  CLI::App app{"Nested multiple instance learning toolkit"};
  app.require_subcommand(1);

  Common o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config merged over the defaults");
    sub->add_option("--seed", o.seed, "Base seed");
    sub->add_option("--jobs", o.jobs, "Worker threads");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--dry-run", o.dry_run, "Print the plan and write nothing");
    return sub;
  };
  auto add_string = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                        const std::string& help) {
    sub->add_option(flag, o.strings[key], help);
  };

  add_common(app.add_subcommand("synth-bench", "Synthetic AUC table and imbalance sweep"));
  CLI::App* pipeline = add_common(app.add_subcommand("pipeline", "Pretrain, embed, train MIL, evaluate"));
  add_string(pipeline, "--aggregator", "aggregator", "vote|mean|max|abmil|nmia");
  add_string(pipeline, "--fusion", "fusion", "image|clinical|both");
  add_string(pipeline, "--mode", "pretrain/mode", "I|C|SC|CE|MULTI");
  CLI::App* pretrain = add_common(app.add_subcommand("pretrain", "Pretrain the instance encoder"));
  add_string(pretrain, "--mode", "pretrain/mode", "I|C|SC|CE|MULTI");
  CLI::App* roi = add_common(app.add_subcommand("roi-extract", "Derive an ROI mask and tile manifest"));
  add_string(roi, "--mask", "mask", "Segmentation mask PNG");
  add_string(roi, "--sidecar", "sidecar", "Sidecar JSON (default: mask path with .json)");
  add_string(roi, "--kind", "kind", "whole|uro|urolp|border|front");
  add_string(roi, "--plan", "plan", "mono10x|mono20x|tri");
  roi->add_option("--threshold", o.threshold, "Minimum ROI coverage per tile");
  CLI::App* grid = add_common(app.add_subcommand("grid-search", "Hyperparameter grid search"));
  add_string(grid, "--aggregator", "aggregator", "vote|mean|max|abmil|nmia");
  CLI::App* eval = add_common(app.add_subcommand("eval", "Evaluate saved pipeline artifacts"));
  add_string(eval, "--artifacts", "artifacts", "Pipeline output directory");
  add_string(eval, "--split", "split", "train|val|test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const json cfg = resolve(command, o);
    if (o.dry_run) std::cout << cfg.dump(2) << "\n";
    return nmil::app::run_command(command, cfg, o.dry_run, std::cout);
  } catch (const nmil::Error& e) {
    nmil::logger()->error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    nmil::logger()->error("unexpected failure: {}", e.what());
    return 1;
  }
}
