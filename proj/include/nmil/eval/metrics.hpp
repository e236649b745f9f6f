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
#include <span>
#include <vector>

namespace nmil::eval {

// Mann-Whitney AUC, P(s+ > s-) + 0.5 P(s+ = s-), computed through midranks.
// Throws DataError unless both classes are present and labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Points for thresholds at every distinct score, descending, starting at
// (0, 0) with threshold +inf. The trapezoidal area equals auc().
std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels);

struct Spread {
  double best = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

Spread spread(std::span<const double> values);

struct RunSummary {
  Spread runs;
  Spread mc;
  std::vector<std::uint64_t> seeds;
};

// `mc_aucs` may be empty; otherwise it must match `aucs` in length.
RunSummary summarize_runs(std::span<const double> aucs,
                          std::span<const double> mc_aucs,
                          std::span<const std::uint64_t> seeds = {});

}  // namespace nmil::eval
