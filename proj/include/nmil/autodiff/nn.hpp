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
#include <map>
#include <string>
#include <vector>

#include "nmil/autodiff/tape.hpp"
#include "nmil/autodiff/tensor.hpp"
#include "nmil/common/rng.hpp"

namespace nmil::ad {

enum class Activation { kIdentity, kTanh, kSigmoid };

// Fully connected stack: widths = {in, hidden..., out}. Weights are stored
// out x in under "<prefix>.W<l>", biases 1 x out under "<prefix>.b<l>".
struct MlpLayout {
  std::string prefix;
  std::vector<std::size_t> widths;
  Activation hidden = Activation::kTanh;
  Activation output = Activation::kIdentity;

  std::size_t layers() const noexcept {
    return widths.empty() ? 0 : widths.size() - 1;
  }
  std::size_t in() const { return widths.front(); }
  std::size_t out() const { return widths.back(); }
  std::string weight(std::size_t layer) const;
  std::string bias(std::size_t layer) const;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)); zero biases.
void init_mlp(const MlpLayout& layout, Rng& rng, TensorMap& params);

// Inverted dropout applied after every hidden activation. A rate of zero
// disables it and draws nothing from the generator.
// The mask is rows x width, so `rows` must match the activation rows.
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;
  std::size_t rows = 1;
};

Tensor dropout_mask(std::size_t rows, std::size_t cols, const Dropout& d);

// Creates each named parameter as a tape input at most once.
class ParamBinder {
 public:
  explicit ParamBinder(Tape& tape, bool differentiable = true)
      : tape_(tape), differentiable_(differentiable) {}
  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  bool differentiable_;
  std::map<std::string, Var, std::less<>> vars_;
};

Var mlp_on_tape(ParamBinder& params, const MlpLayout& layout, Var x,
                const Dropout& dropout = {});

// Tape-free evaluation using the same kernels; bit-identical to the tape.
Tensor mlp_apply(const MlpLayout& layout, const TensorMap& params,
                 const Tensor& x, const Dropout& dropout = {});

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Updates every parameter that has an entry in the gradient map.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSettings settings) : settings_(settings) {}
  void step(TensorMap& params, const Gradients& grads);
  const OptimizerSettings& settings() const { return settings_; }

 private:
  OptimizerSettings settings_;
  std::size_t steps_ = 0;
  TensorMap first_moment_;
  TensorMap second_moment_;
};

}  // namespace nmil::ad
