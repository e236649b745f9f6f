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
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nmil/autodiff/nn.hpp"
#include "nmil/data/bag.hpp"
#include "nmil/data/synth.hpp"
#include "nmil/mil/model.hpp"

namespace nmil::mil {

struct TrainConfig {
  double learning_rate = 1e-2;
  ad::OptimizerKind optimizer = ad::OptimizerKind::kSgd;
  std::size_t n_b = 64;            // instances sampled per region each epoch
  double dropout = 0.2;            // d_r, after each hidden Psi layer
  double alpha = 0.9;              // focal Tversky alpha_l
  double gamma = 2.0;              // focal Tversky gamma_l
  std::vector<std::size_t> psi_hidden{256, 128};
  std::size_t n_att = 128;
  std::vector<std::size_t> head_hidden{64};
  std::size_t max_epochs = 200;
  std::size_t patience = 30;
  std::size_t runs = 5;
  // Bags per optimizer step. The loss is a batch statistic, so a lone
  // negative bag carries no gradient.
  std::size_t batch_size = 16;
  // Instances per region when scoring validation bags (fixed across epochs).
  std::size_t eval_n_b = data::kWholeBag;
  std::uint64_t seed = 0;

  void validate() const;
  ModelSpec model_spec(Aggregator aggregator, Fusion fusion,
                       std::size_t feature_dim, std::size_t clinical_dim) const;
};

std::string_view optimizer_name(ad::OptimizerKind kind);
ad::OptimizerKind parse_optimizer(std::string_view name);  // sgd|adam

// n_b / eval_n_b equal to kWholeBag are written as the string "L".
nlohmann::json to_json(const TrainConfig& config);
// Keys absent from `j` keep their value in `base`. Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainResult {
  MilModel model;  // weights of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;
  bool early_stopped = false;
};

// Minimizes focal Tversky on train bags with per-epoch subsampling and keeps
// the earliest epoch with the highest validation AUC. Stops after `patience`
// epochs without strict improvement. Throws NumericError on a non-finite
// loss or gradient, naming the epoch and batch.
TrainResult train_mil(const data::Dataset& ds, const ModelSpec& spec,
                      const TrainConfig& config);

// `config.runs` independent runs with seeds config.seed + run, in parallel.
std::vector<TrainResult> train_runs(const data::Dataset& ds, const ModelSpec& spec,
                                    const TrainConfig& config, std::size_t jobs);

std::vector<double> predict_scores(const MilModel& model,
                                   const std::vector<data::NestedBag>& bags);
std::vector<int> bag_labels(const std::vector<data::NestedBag>& bags);
double evaluate_auc(const MilModel& model, const std::vector<data::NestedBag>& bags);

// "epoch,train_loss,val_auc" with a header row.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace nmil::mil
