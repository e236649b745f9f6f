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

#include "config.hpp"

#include <cstdlib>

#include "nmil/common/error.hpp"
#include "nmil/data/embeddings.hpp"
#include "nmil/mil/train.hpp"

namespace nmil::app {
namespace {

json default_synth() {
  return {{"class0", {3.0, 2.5}},
          {"class1", {-3.0, 1.0}},
          {"n_bags", 150},
          {"split", {90, 30, 30}},
          {"bag_size", {3000, 7000}},
          {"positive_bag_fraction", 0.5},
          {"rho", {0.0, 0.5}},
          {"label_rule", "standard"},
          {"regions", nullptr}};
}

// Desk-scale widths; the searched grid goes up to 4096.
json desk_train() {
  mil::TrainConfig c;
  c.eval_n_b = 512;
  json j = mil::to_json(c);
  j.erase("seed");
  return j;
}

json encoder_block() {
  return {{"hidden", {256}}, {"feature_dim", 128}, {"proj_dim", 64}};
}

json pretrain_block() {
  return {{"mode", "C"},
          {"tau", 0.07},
          {"batch_size", 128},
          {"learning_rate", 1e-4},
          {"epochs", 10},
          {"alpha_c", 1.0},
          {"alpha_ce", 0.5},
          {"optimizer", "adam"},
          {"max_instances_per_epoch", 4096},
          {"augmenter", {{"noise_sigma", 0.05}, {"coord_dropout", 0.1}, {"scale", {0.9, 1.1}}}}};
}

json synth_data() {
  json d = {{"source", "synth"}, {"synth", default_synth()}, {"manifest", ""}};
  return d;
}

}  // namespace

json default_config(const std::string& command) {
  json c = {{"seed", 1}, {"jobs", 1}, {"out", "nmil-out/" + command}};
  if (command == "synth-bench") {
    c["task"] = "synth";
    c["synth"] = default_synth();
    c["distributions"] = {{-3.0, 1.0}, {0.0, 2.0}, {2.0, 1.5}};
    c["aggregator"] = "abmil";
    c["standardize"] = true;
    c["train"] = desk_train();
    c["sweep"] = {{"enabled", true},
                  {"class1", {0.0, 2.0}},
                  {"fractions", {0.25, 0.4, 0.5}},
                  {"rho_ranges", {{0.0, 0.5}, {0.0, 0.75}}},
                  {"seeds", 5}};
  } else if (command == "pipeline") {
    c["task"] = "mil-train";
    c["data"] = synth_data();
    c["data"]["synth"]["regions"] = {2, 6};
    c["roi"] = "synthetic";
    c["standardize"] = true;
    c["encoder"] = encoder_block();
    c["pretrain"] = pretrain_block();
    c["aggregator"] = "nmia";
    c["fusion"] = "image";
    c["train"] = desk_train();
    c["mc"] = {{"runs", 5}, {"rate", 0.05}};
  } else if (command == "pretrain") {
    c["task"] = "pretrain";
    c["data"] = synth_data();
    c["standardize"] = true;
    c["encoder"] = encoder_block();
    c["pretrain"] = pretrain_block();
  } else if (command == "roi-extract") {
    c["task"] = "roi-extract";
    c["mask"] = "";
    c["sidecar"] = "";
    c["kind"] = "urolp";
    c["plan"] = "mono10x";
    c["threshold"] = 0.7;
    c["microns"] = 800.0;
  } else if (command == "grid-search") {
    c["task"] = "grid";
    c["data"] = synth_data();
    c["standardize"] = true;
    c["aggregator"] = "abmil";
    c["fusion"] = "image";
    c["train"] = desk_train();
    c["grid"] = {{"learning_rate", {1e-2}}, {"optimizer", {"sgd"}}, {"n_b", {64}},
                 {"dropout", {0.2}}, {"alpha", {0.9}}, {"gamma", {2.0}},
                 {"n_psi", {128}}, {"n_att", {128}}};
  } else if (command == "eval") {
    c["task"] = "eval";
    c["artifacts"] = "";
    c["data"] = synth_data();
    c["split"] = "test";
    c["mc"] = {{"runs", 5}, {"rate", 0.05}};
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return c;
}

json merge_config(const json& defaults, const json& overrides, const std::string& path) {
  if (!overrides.is_object()) throw ConfigError("config " + (path.empty() ? "root" : path) + " must be an object");
  json out = defaults;
  for (const auto& [key, value] : overrides.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!defaults.contains(key)) throw ConfigError("unknown config key '" + where + "'");
    // Free-form blocks replace wholesale.
    const bool nested = defaults[key].is_object() && value.is_object() && key != "grid";
    out[key] = nested ? merge_config(defaults[key], value, where) : value;
  }
  return out;
}

json to_json(const data::SynthSpec& s) {
  json rule = s.label_rule.kind == data::LabelRule::Kind::kStandard
                  ? json("standard")
                  : json{{"threshold", s.label_rule.threshold}};
  json regions = s.region_chunks ? json{s.min_regions, s.max_regions} : json(nullptr);
  return {{"class0", {s.class0.mean, s.class0.stddev}},
          {"class1", {s.class1.mean, s.class1.stddev}},
          {"n_bags", s.n_bags},
          {"split", s.split},
          {"bag_size", {s.min_bag_size, s.max_bag_size}},
          {"positive_bag_fraction", s.positive_bag_fraction},
          {"rho", {s.min_positive_fraction, s.max_positive_fraction}},
          {"label_rule", rule},
          {"regions", regions}};
}

data::SynthSpec synth_from_json(const json& j, std::uint64_t seed) {
  data::SynthSpec s;
  const auto pair = [&](const char* key) {
    const auto v = get<std::vector<double>>(j, key);
    if (v.size() != 2) throw ConfigError(std::string("synth.") + key + " must have two entries");
    return v;
  };
  const auto c0 = pair("class0"), c1 = pair("class1"), rho = pair("rho");
  s.class0 = {c0[0], c0[1]};
  s.class1 = {c1[0], c1[1]};
  s.n_bags = get<std::size_t>(j, "n_bags");
  const auto split = get<std::vector<std::size_t>>(j, "split");
  if (split.size() != 3) throw ConfigError("synth.split must have three entries");
  s.split = {split[0], split[1], split[2]};
  const auto sizes = get<std::vector<std::size_t>>(j, "bag_size");
  if (sizes.size() != 2) throw ConfigError("synth.bag_size must have two entries");
  s.min_bag_size = sizes[0];
  s.max_bag_size = sizes[1];
  s.positive_bag_fraction = get<double>(j, "positive_bag_fraction");
  s.min_positive_fraction = rho[0];
  s.max_positive_fraction = rho[1];
  const json& rule = j.at("label_rule");
  if (rule.is_string() && rule.get<std::string>() == "standard") {
    s.label_rule = data::LabelRule::standard();
  } else if (rule.is_object() && rule.contains("threshold")) {
    s.label_rule = data::LabelRule::at_least_fraction(get<double>(rule, "threshold"));
  } else {
    throw ConfigError("synth.label_rule must be \"standard\" or {\"threshold\": t}");
  }
  if (j.contains("regions") && !j["regions"].is_null()) {
    const auto r = get<std::vector<std::size_t>>(j, "regions");
    if (r.size() != 2) throw ConfigError("synth.regions must be null or [min, max]");
    s.region_chunks = true;
    s.min_regions = r[0];
    s.max_regions = r[1];
  }
  s.seed = seed;
  s.validate();
  return s;
}

enc::EncoderShape encoder_shape_from_json(const json& j, std::size_t input_dim) {
  enc::EncoderShape s;
  s.input_dim = input_dim;
  s.hidden = get<std::vector<std::size_t>>(j, "hidden");
  s.feature_dim = get<std::size_t>(j, "feature_dim");
  s.proj_dim = get<std::size_t>(j, "proj_dim");
  if (s.feature_dim == 0 || s.proj_dim == 0) throw ConfigError("encoder widths must be >= 1");
  for (std::size_t w : s.hidden) {
    if (w == 0) throw ConfigError("encoder widths must be >= 1");
  }
  return s;
}

enc::PretrainConfig pretrain_config_from_json(const json& j, std::uint64_t seed) {
  enc::PretrainConfig c;
  c.tau = get<double>(j, "tau");
  c.batch_size = get<std::size_t>(j, "batch_size");
  c.learning_rate = get<double>(j, "learning_rate");
  c.epochs = get<std::size_t>(j, "epochs");
  c.alpha_c = get<double>(j, "alpha_c");
  c.alpha_ce = get<double>(j, "alpha_ce");
  c.optimizer = mil::parse_optimizer(get<std::string>(j, "optimizer"));
  c.max_instances_per_epoch = get<std::size_t>(j, "max_instances_per_epoch");
  const json& aug = j.at("augmenter");
  c.augmenter.noise_sigma = get<double>(aug, "noise_sigma");
  c.augmenter.coord_dropout = get<double>(aug, "coord_dropout");
  const auto scale = get<std::vector<double>>(aug, "scale");
  if (scale.size() != 2) throw ConfigError("augmenter.scale must be [min, max]");
  c.augmenter.scale_min = scale[0];
  c.augmenter.scale_max = scale[1];
  c.augmenter.seed = seed;
  c.seed = seed;
  c.validate();
  return c;
}

data::Dataset load_dataset(const json& d, std::uint64_t seed) {
  const std::string source = get<std::string>(d, "source");
  if (source == "synth") return data::gen_synth_bags(synth_from_json(d.at("synth"), seed));
  if (source == "manifest") {
    const std::string path = get<std::string>(d, "manifest");
    if (path.empty()) throw ConfigError("data.manifest must name an embedding manifest");
    return data::load_embeddings(path);
  }
  throw ConfigError("data.source must be \"synth\" or \"manifest\"");
}

}  // namespace nmil::app
