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

#include "nmil/autodiff/tape.hpp"
#include "nmil/autodiff/tensor.hpp"

// Forward kernels shared by the tape and by tape-free inference paths, so
// both produce bit-identical values.
namespace nmil::ad::kernels {

// Broadcast result shape of two elementwise operands; throws ShapeError.
Tensor::Shape broadcast_shape(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);
Tensor add(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor tanh(Tensor x);
Tensor sigmoid(Tensor x);
Tensor exp(Tensor x);
Tensor log(Tensor x);
Tensor softmax(const Tensor& x, Axis axis);
// x / sqrt(|x|^2 + eps^2), so a zero vector maps to zero.
inline constexpr double kL2Epsilon = 1e-12;
Tensor l2_normalize(const Tensor& x, Axis axis);
Tensor concat(const std::vector<const Tensor*>& parts, Axis axis);
Tensor reduce_sum(const Tensor& x, Axis axis);
Tensor reduce_mean(const Tensor& x, Axis axis);
Tensor reduce_max(const Tensor& x, Axis axis);

double sigmoid(double x);

// Grouping of a tensor's elements for axis-wise operations: element e of
// group g sits at g * group_stride + e * elem_stride.
struct Groups {
  std::size_t count;
  std::size_t length;
  std::size_t group_stride;
  std::size_t elem_stride;
};
Groups groups(const Tensor& x, Axis axis);
Tensor::Shape reduced_shape(const Tensor& x, Axis axis);

}  // namespace nmil::ad::kernels
