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
#include "nmil/autodiff/tape.hpp"
#include "nmil/data/bag.hpp"

namespace nmil::mil {

enum class Aggregator { kVote, kMean, kMax, kAbMil, kNmia };
// What Psi sees: the bag embedding, the clinical vector, or both concatenated.
enum class Fusion { kImage, kClinical, kBoth };

std::string_view aggregator_name(Aggregator a);
Aggregator parse_aggregator(std::string_view name);  // vote|mean|max|abmil|nmia
std::string_view fusion_name(Fusion f);
Fusion parse_fusion(std::string_view name);  // image|clinical|both
bool has_attention(Aggregator a) noexcept;

// Gated attention parameters: V, U are n_att x dim, w is n_att x 1.
struct GatedAttention {
  std::string prefix;
  std::size_t n_att = 0;
  std::size_t dim = 0;

  std::string v() const { return prefix + ".V"; }
  std::string u() const { return prefix + ".U"; }
  std::string w() const { return prefix + ".w"; }
};

void init_attention(const GatedAttention& att, Rng& rng, ad::TensorMap& params);

struct AttentionVars {
  ad::Var weights;      // L x 1, softmax over instances
  ad::Var embedding;    // 1 x dim
};

// a = softmax_l(w^T (tanh(V h_l) * sigm(U h_l))), z = a^T H.
AttentionVars gated_attention(ad::ParamBinder& params, const GatedAttention& att,
                              ad::Var h);

struct AttentionValue {
  std::vector<double> weights;
  std::vector<double> embedding;
};
AttentionValue gated_attention(const ad::Tensor& h, const ad::TensorMap& params,
                               const GatedAttention& att);

enum class PoolMode { kMean, kMax };
ad::Tensor pool(const ad::Tensor& h, PoolMode mode);

// Fraction of instance probabilities above 0.5.
double majority_vote(const std::vector<double>& instance_probs);

struct ModelSpec {
  Aggregator aggregator = Aggregator::kAbMil;
  Fusion fusion = Fusion::kImage;
  std::size_t feature_dim = 0;
  std::size_t clinical_dim = 0;
  std::vector<std::size_t> psi_hidden{256, 128};
  std::size_t n_att = 128;
  // Hidden widths of the per-instance head used by majority voting.
  std::vector<std::size_t> head_hidden{64};

  void validate() const;
  std::size_t psi_input() const;
};

struct MilModel {
  ModelSpec spec;
  GatedAttention attention;       // AbMIL, and NMIA region level
  GatedAttention bag_attention;   // NMIA bag level
  ad::MlpLayout psi;              // outputs one logit
  ad::MlpLayout head;             // majority voting only, one logit
  ad::TensorMap params;
  std::uint64_t seed = 0;
};

MilModel init_model(const ModelSpec& spec, std::uint64_t seed);

// Graph handles for one bag recorded on a tape.
struct BagVars {
  ad::Var prob;                           // 1 x 1 bag probability (not vote)
  ad::Var instance_probs;                 // L x 1 (vote only)
  std::vector<ad::Var> region_attention;  // per region (NMIA) or one (AbMIL)
  ad::Var bag_attention;                  // K x 1 (NMIA only)
  bool has_bag_attention = false;
};

// Records the forward pass of `model` for a bag with `regions` regions whose
// instance matrices are bound as "<tag>.r<k>" and clinical as "<tag>.c".
// Dropout (psi_dropout.rate > 0) is applied after each hidden Psi layer.
BagVars bag_on_tape(ad::ParamBinder& params, const MilModel& model,
                    const std::string& tag, std::size_t regions,
                    const ad::Dropout& psi_dropout = {});

// Adds the inputs read by bag_on_tape. Throws DataError when the bag does not
// fit the model (feature or clinical width).
void bind_bag(ad::TensorMap& inputs, const MilModel& model,
              const std::string& tag, const data::NestedBag& bag);

struct BagPrediction {
  double score = 0.0;  // bag probability, or the vote fraction
  std::vector<std::vector<double>> region_attention;
  std::vector<double> bag_attention;
  std::vector<double> instance_probs;
};

// Deterministic unless `psi_dropout` has a nonzero rate.
BagPrediction predict(const MilModel& model, const data::NestedBag& bag,
                      const ad::Dropout& psi_dropout = {});

nlohmann::json to_json(const MilModel& model);
MilModel model_from_json(const nlohmann::json& j);

}  // namespace nmil::mil
