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
#include <string_view>
#include <vector>

#include "nmil/autodiff/tensor.hpp"

namespace nmil::ad {

// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// Reduction / normalization axis. k0 runs down the rows (one result per
// column), k1 runs along each row, kAll covers every element.
enum class Axis { k0, k1, kAll };

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  kMatMul,
  kAdd,
  kMultiply,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSoftmax,
  kL2Normalize,
  kConcat,
  kReduceSum,
  kReduceMean,
  kReduceMax,
};

std::string_view op_name(Op op);

using Gradients = TensorMap;

// A recorded computation graph. Nodes are appended in topological order
// (parents always precede children). Inputs are bound by name at forward
// time, so one tape can be replayed on inputs of different extents.
class Tape {
 public:
  // A named leaf. Differentiable inputs are the parameters reported by
  // backward() and perturbed by finite_diff_check().
  Var input(std::string name, bool differentiable = true);
  Var constant(Tensor value);
  Var scalar(double value) { return constant(Tensor::scalar(value)); }

  Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
  // Elementwise with broadcasting of unit extents.
  Var add(Var a, Var b);
  Var multiply(Var a, Var b);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var exp(Var x);
  Var log(Var x);
  Var softmax(Var x, Axis axis);
  Var l2_normalize(Var x, Axis axis);
  Var concat(const std::vector<Var>& parts, Axis axis);
  Var reduce_sum(Var x, Axis axis = Axis::kAll);
  Var reduce_mean(Var x, Axis axis = Axis::kAll);
  Var reduce_max(Var x, Axis axis = Axis::kAll);

  // Compositions of the primitives above.
  Var scale(Var x, double factor) { return multiply(x, scalar(factor)); }
  Var shift(Var x, double offset) { return add(x, scalar(offset)); }
  Var subtract(Var a, Var b) { return add(a, scale(b, -1.0)); }
  Var one_minus(Var x) { return shift(scale(x, -1.0), 1.0); }
  // exp(-log(b)) * a; b must be positive.
  Var divide(Var a, Var b) { return multiply(a, exp(scale(log(b), -1.0))); }
  Var power(Var x, double exponent) { return exp(scale(log(x), exponent)); }

  // The output defaults to the last recorded node.
  void set_output(Var v);
  Var output() const;

  // Evaluates every node. Throws ShapeError / NumericError naming the node.
  const Tensor& forward(const TensorMap& inputs);

  // Reverse sweep from the output; gradient of seed * sum(output).
  Gradients backward(double seed = 1.0);

  const Tensor& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool has_forward() const noexcept { return forward_done_; }
  Op op(Var v) const { return nodes_.at(v.id).op; }

  // Names of the differentiable inputs, in recording order.
  std::vector<std::string> parameter_names() const;

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<std::uint32_t> parents;
    Axis axis = Axis::kAll;
    bool transpose_a = false;
    bool transpose_b = false;
    bool requires_grad = false;
    std::string name;
    Tensor constant;
  };

  Var push(Node node);
  void check_var(Var v) const;
  void evaluate(std::uint32_t id, const TensorMap& inputs);
  void propagate(std::uint32_t id, std::vector<Tensor>& grads) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> values_;
  std::uint32_t output_ = 0;
  bool has_output_ = false;
  bool forward_done_ = false;
};

}  // namespace nmil::ad
