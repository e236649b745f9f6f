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
#include <string>

#include "nmil/autodiff/tape.hpp"

namespace nmil::ad {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_input;
  std::size_t worst_index = 0;
  double tolerance = 0.0;
  bool passed() const noexcept { return max_relative_error <= tolerance; }
};

// Compares backward() against central differences on every element of every
// differentiable input. Relative error is |analytic - numeric| /
// max(1, |numeric|). The output must be a single element.
GradCheckReport finite_diff_check(Tape& tape, const TensorMap& inputs,
                                  double tolerance, double step = 1e-5);

}  // namespace nmil::ad
