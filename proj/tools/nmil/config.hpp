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

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "nmil/common/error.hpp"
#include "nmil/data/bag.hpp"
#include "nmil/data/synth.hpp"
#include "nmil/encoder/encoder.hpp"
#include "nmil/encoder/pretrain.hpp"

namespace nmil::app {

using nlohmann::json;

// Default configuration for each subcommand; files are merged over these
// with JSON merge-patch semantics and flags are applied last.
json default_config(const std::string& command);

// Recursive merge where objects merge key by key and every other value
// replaces. Keys absent from `defaults` are rejected with their path.
json merge_config(const json& defaults, const json& overrides, const std::string& path = "");

json to_json(const data::SynthSpec& spec);
// Reads the "synth" block; `seed` is the dataset seed.
data::SynthSpec synth_from_json(const json& j, std::uint64_t seed);

enc::EncoderShape encoder_shape_from_json(const json& j, std::size_t input_dim);
enc::PretrainConfig pretrain_config_from_json(const json& j, std::uint64_t seed);

// Loads the "data" block: {"source": "synth", "synth": {...}} or
// {"source": "manifest", "manifest": PATH}.
data::Dataset load_dataset(const json& data, std::uint64_t seed);

// Typed accessor that reports the offending key as a ConfigError.
template <typename T>
T get(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace nmil::app
