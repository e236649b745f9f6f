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

#include "nmil/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nmil/common/error.hpp"

namespace nmil::ad {

GradCheckReport finite_diff_check(Tape& tape, const TensorMap& inputs,
                                  double tolerance, double step) {
  const Tensor& out = tape.forward(inputs);
  if (out.size() != 1) {
    throw ShapeError("finite_diff_check needs a scalar output, got " +
                     out.shape_string());
  }
  const Gradients analytic = tape.backward();

  GradCheckReport report;
  report.tolerance = tolerance;
  TensorMap probe = inputs;
  for (const auto& [name, grad] : analytic) {
    Tensor& x = probe.at(name);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double original = x[i];
      x[i] = original + step;
      const double up = tape.forward(probe)[0];
      x[i] = original - step;
      const double down = tape.forward(probe)[0];
      x[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::abs(grad[i] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > report.max_relative_error || report.worst_input.empty()) {
        report.max_relative_error = std::max(err, report.max_relative_error);
        report.worst_input = name;
        report.worst_index = i;
      }
    }
  }
  tape.forward(inputs);
  return report;
}

}  // namespace nmil::ad
