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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmil/data/bag.hpp"
#include "nmil/mil/model.hpp"
#include "nmil/roi/io.hpp"

namespace nmil::eval {

inline constexpr std::size_t kMcRuns = 5;
inline constexpr double kMcRate = 0.05;

// Mean bag score over `runs` forward passes with dropout in the Psi hidden
// layers. The generator depends on (seed, bag id) only. Majority voting has
// no Psi, so its score is deterministic. Throws ConfigError unless
// 0 <= rate < 1 and runs >= 1.
double mc_dropout_predict(const mil::MilModel& model, const data::NestedBag& bag,
                          std::size_t runs = kMcRuns, double rate = kMcRate,
                          std::uint64_t seed = 0);
std::vector<double> mc_dropout_scores(const mil::MilModel& model,
                                      const std::vector<data::NestedBag>& bags,
                                      std::size_t runs = kMcRuns, double rate = kMcRate,
                                      std::uint64_t seed = 0);

// Top-left corner and side of an instance's tile, in any pixel unit.
struct TileCoord {
  long long x = 0;
  long long y = 0;
  std::size_t size = 0;
};

struct AttentionRow {
  std::string region_id;
  std::string instance_id;
  double instance_weight = 0.0;  // within its region (whole bag for AbMIL)
  double region_weight = 1.0;    // NMIA bag-level weight of the region
  double attention = 0.0;        // instance_weight * region_weight
};

struct AttentionExport {
  std::vector<AttentionRow> rows;  // region order, then instance order
  std::optional<roi::GrayImage> heatmap;
};

// Throws ConfigError for aggregators without attention. When `tiles` is
// given it must hold one entry per instance in row order; each tile is
// painted with round(255 * attention / max attention) on a raster whose
// pixel is `downsample` input units (overlaps keep the larger value).
AttentionExport export_attention(const mil::MilModel& model, const data::NestedBag& bag,
                                 const std::vector<TileCoord>* tiles = nullptr,
                                 std::size_t downsample = 1);

// "region_id,instance_id,attention" with a header row.
std::string attention_csv(const AttentionExport& e);

}  // namespace nmil::eval
