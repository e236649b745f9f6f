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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nmil/autodiff/nn.hpp"
#include "nmil/autodiff/tensor.hpp"
#include "nmil/data/bag.hpp"

namespace nmil::enc {

// Weight regimes: random init, unsupervised contrastive, supervised
// contrastive, cross entropy through the classifier head, multi-task.
enum class PretrainMode { kI, kC, kSC, kCE, kMulti };

std::string_view mode_name(PretrainMode mode);
// Accepts I, C, SC, CE, MULTI (case-insensitive). Throws ConfigError.
PretrainMode parse_mode(std::string_view name);
bool needs_labels(PretrainMode mode) noexcept;

struct EncoderShape {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{256};
  std::size_t feature_dim = 128;
  std::size_t proj_dim = 64;
  std::size_t classes = 2;
};

// G maps instances to features (tanh output), F projects features onto the
// unit sphere, C produces class logits from features.
struct EncoderStack {
  ad::MlpLayout g;
  ad::MlpLayout f;
  ad::MlpLayout c;
  ad::TensorMap params;
  PretrainMode mode = PretrainMode::kI;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return g.in(); }
  std::size_t feature_dim() const { return g.out(); }
  std::size_t proj_dim() const { return f.out(); }
  std::size_t classes() const { return c.out(); }
};

// Seeded Xavier initialization of G, F and C, always in that order.
EncoderStack init_encoder(const EncoderShape& shape, std::uint64_t seed);

// Rows of `x` are instances. Throws DataError on a dimension mismatch.
ad::Tensor embed(const EncoderStack& stack, const ad::Tensor& x);
std::vector<double> embed(const EncoderStack& stack, const data::InstanceVec& x);
// Unit-norm projections F(G(x)).
ad::Tensor project(const EncoderStack& stack, const ad::Tensor& x);

// Replaces every region's instances with their features. Bags are embedded
// in parallel on up to `jobs` threads.
data::Dataset embed_dataset(const EncoderStack& stack, const data::Dataset& ds,
                            std::size_t jobs = 1);

nlohmann::json to_json(const EncoderStack& stack);
EncoderStack encoder_from_json(const nlohmann::json& j);

// Vector-space stand-in for image augmentation: additive Gaussian noise
// scaled by the per-coordinate feature std, inverted coordinate dropout and
// a global scale factor drawn from U[scale_min, scale_max].
struct VectorAugmenter {
  double noise_sigma = 0.05;
  double coord_dropout = 0.1;
  double scale_min = 0.9;
  double scale_max = 1.1;
  std::vector<double> feature_std;  // empty means unit std
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const noexcept {
    return noise_sigma == 0.0 && coord_dropout == 0.0 && scale_min == 1.0 &&
           scale_max == 1.0;
  }
};

// One view, deterministic in (aug.seed, item, view).
std::vector<double> augment_view(std::span<const double> x,
                                 const VectorAugmenter& aug, std::uint64_t item,
                                 std::uint64_t view);
std::pair<std::vector<double>, std::vector<double>> augment_pair(
    std::span<const double> x, const VectorAugmenter& aug, std::uint64_t item);

}  // namespace nmil::enc
