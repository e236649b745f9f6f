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
#include <vector>

#include "nmil/autodiff/nn.hpp"
#include "nmil/data/bag.hpp"
#include "nmil/encoder/encoder.hpp"

namespace nmil::enc {

struct PretrainConfig {
  double tau = 0.07;
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;
  std::size_t epochs = 10;
  double alpha_c = 1.0;
  double alpha_ce = 0.5;
  ad::OptimizerKind optimizer = ad::OptimizerKind::kAdam;
  // Instances drawn (without replacement) per epoch; 0 uses all of them.
  std::size_t max_instances_per_epoch = 0;
  // feature_std is filled from the training pool when left empty.
  VectorAugmenter augmenter;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flattened training instances. `labels` is empty when any instance lacks
// a label.
struct InstancePool {
  ad::Tensor x;
  std::vector<int> labels;

  std::size_t size() const noexcept { return x.rows(); }
};

InstancePool collect_instances(const std::vector<data::NestedBag>& bags);

struct PretrainResult {
  EncoderStack stack;
  std::vector<double> epoch_loss;
};

// Mode I returns `init` unchanged. Other modes train G with F (contrastive
// terms) and/or C (cross entropy) on two augmented views per instance.
// Throws ConfigError when a labelled mode meets an unlabelled pool.
PretrainResult pretrain(const InstancePool& pool, PretrainMode mode,
                        const PretrainConfig& config, EncoderStack init);
PretrainResult pretrain(const data::Dataset& ds, PretrainMode mode,
                        const PretrainConfig& config, EncoderStack init);

}  // namespace nmil::enc
