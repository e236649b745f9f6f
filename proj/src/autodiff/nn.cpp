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

#include "nmil/autodiff/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "nmil/autodiff/kernels.hpp"
#include "nmil/common/error.hpp"

namespace nmil::ad {

std::string MlpLayout::weight(std::size_t layer) const {
  return prefix + ".W" + std::to_string(layer);
}

std::string MlpLayout::bias(std::size_t layer) const {
  return prefix + ".b" + std::to_string(layer);
}

void init_mlp(const MlpLayout& layout, Rng& rng, TensorMap& params) {
  if (layout.widths.size() < 2) {
    throw ConfigError("MLP '" + layout.prefix + "' needs at least two widths");
  }
  for (std::size_t l = 0; l < layout.layers(); ++l) {
    const std::size_t fan_in = layout.widths[l];
    const std::size_t fan_out = layout.widths[l + 1];
    if (fan_in == 0 || fan_out == 0) {
      throw ConfigError("MLP '" + layout.prefix + "' has a zero width");
    }
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_out, fan_in});
    for (double& v : w.storage()) v = (2.0 * uniform01(rng) - 1.0) * limit;
    params[layout.weight(l)] = std::move(w);
    params[layout.bias(l)] = Tensor({1, fan_out}, 0.0);
  }
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, const Dropout& d) {
  Tensor mask({rows, cols}, 1.0);
  if (d.rate <= 0.0) return mask;
  if (d.rng == nullptr) throw std::invalid_argument("dropout without an RNG");
  const double keep = 1.0 / (1.0 - d.rate);
  for (double& v : mask.storage()) v = uniform01(*d.rng) < d.rate ? 0.0 : keep;
  return mask;
}

Var ParamBinder::operator()(const std::string& name) {
  auto it = vars_.find(name);
  if (it != vars_.end()) return it->second;
  const Var v = tape_.input(name, differentiable_);
  vars_.emplace(name, v);
  return v;
}

namespace {

Var activate_on_tape(Tape& tape, Var x, Activation a) {
  switch (a) {
    case Activation::kTanh: return tape.tanh(x);
    case Activation::kSigmoid: return tape.sigmoid(x);
    case Activation::kIdentity: break;
  }
  return x;
}

Tensor activate(Tensor x, Activation a) {
  switch (a) {
    case Activation::kTanh: return kernels::tanh(std::move(x));
    case Activation::kSigmoid: return kernels::sigmoid(std::move(x));
    case Activation::kIdentity: break;
  }
  return x;
}

}  // namespace

Var mlp_on_tape(ParamBinder& params, const MlpLayout& layout, Var x,
                const Dropout& dropout) {
  Tape& tape = params.tape();
  for (std::size_t l = 0; l < layout.layers(); ++l) {
    x = tape.add(tape.matmul(x, params(layout.weight(l)), false, true),
                 params(layout.bias(l)));
    const bool last = l + 1 == layout.layers();
    x = activate_on_tape(tape, x, last ? layout.output : layout.hidden);
    if (!last && dropout.rate > 0.0) {
      x = tape.multiply(x, tape.constant(dropout_mask(
                               dropout.rows, layout.widths[l + 1], dropout)));
    }
  }
  return x;
}

Tensor mlp_apply(const MlpLayout& layout, const TensorMap& params,
                 const Tensor& x, const Dropout& dropout) {
  Tensor h = x;
  for (std::size_t l = 0; l < layout.layers(); ++l) {
    h = kernels::add(
        kernels::matmul(h, params.at(layout.weight(l)), false, true),
        params.at(layout.bias(l)));
    const bool last = l + 1 == layout.layers();
    h = activate(std::move(h), last ? layout.output : layout.hidden);
    if (!last && dropout.rate > 0.0) {
      h = kernels::multiply(
          h, dropout_mask(h.rows(), layout.widths[l + 1], dropout));
    }
  }
  return h;
}

void Optimizer::step(TensorMap& params, const Gradients& grads) {
  ++steps_;
  const double lr = settings_.learning_rate;
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    if (p.shape() != g.shape()) {
      throw ShapeError("gradient shape " + g.shape_string() +
                       " does not match parameter '" + name + "' " +
                       p.shape_string());
    }
    if (settings_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
      continue;
    }
    auto [mit, m_new] = first_moment_.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [vit, v_new] = second_moment_.try_emplace(name, Tensor(p.shape(), 0.0));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + settings_.epsilon);
    }
  }
}

}  // namespace nmil::ad
