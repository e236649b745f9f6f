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
#include <vector>

#include <json.hpp>

#include "nmil/data/bag.hpp"
#include "nmil/eval/metrics.hpp"
#include "nmil/mil/train.hpp"

namespace nmil::mil {

// Value lists per hyperparameter. n_b may hold data::kWholeBag for "L".
// A width v in n_psi gives Psi hidden widths (v, v / 2).
struct Grid {
  std::vector<double> learning_rate;
  std::vector<ad::OptimizerKind> optimizer;
  std::vector<std::size_t> n_b;
  std::vector<double> dropout;
  std::vector<double> alpha;
  std::vector<double> gamma;
  std::vector<std::size_t> n_psi;
  std::vector<std::size_t> n_att;

  // The full admissible lists.
  static Grid full();
  std::size_t size() const noexcept;
  // Throws ConfigError when a list is empty or holds a value outside the
  // admissible lists.
  void validate() const;
  // Row-major expansion (learning rate varies slowest); fields not in the
  // grid come from `base`.
  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

Grid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Grid& grid);

struct GridEntry {
  TrainConfig config;
  std::vector<double> val_aucs;  // best validation AUC per run
  eval::Spread val;
};

// Trains every combination with base.runs seeds (all runs of all
// combinations share one pool of `jobs` threads) and ranks by mean
// validation AUC, ties kept in expansion order.
std::vector<GridEntry> grid_search(const data::Dataset& ds, Aggregator aggregator,
                                   Fusion fusion, std::size_t feature_dim,
                                   std::size_t clinical_dim, const Grid& grid,
                                   const TrainConfig& base, std::size_t jobs);

nlohmann::json to_json(const std::vector<GridEntry>& ranked);

}  // namespace nmil::mil
