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

#include "nmil/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nmil/common/error.hpp"

namespace nmil::eval {
namespace {

void check_scored(std::span<const double> scores, std::span<const int> labels,
                  std::size_t& positives) {
  if (scores.size() != labels.size()) {
    throw DataError("auc: " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
  }
  positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DataError("auc: NaN score");
    positives += static_cast<std::size_t>(labels[i]);
  }
  if (positives == 0 || positives == labels.size()) {
    throw DataError("auc needs at least one positive and one negative, got " +
                    std::to_string(positives) + " positives of " +
                    std::to_string(labels.size()));
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0;
  check_scored(scores, labels, pos);
  const std::size_t n = scores.size();
  const std::size_t neg = n - pos;
  const std::vector<std::size_t> idx = order_by_score(scores);
  // Twice the positive rank sum keeps midranks integral, so the statistic is
  // an exact ratio of integers.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const std::uint64_t twice_mid = i + 1 + j;  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) twice_rank_sum += twice_mid;
    }
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - pos * (pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) *
                                         static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels) {
  std::size_t pos = 0;
  check_scored(scores, labels, pos);
  const double p = static_cast<double>(pos);
  const double q = static_cast<double>(scores.size() - pos);
  std::vector<std::size_t> idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    out.push_back({static_cast<double>(fp) / q, static_cast<double>(tp) / p, s});
  }
  return out;
}

Spread spread(std::span<const double> unordered) {
  if (unordered.empty()) throw DataError("cannot summarize zero runs");
  // Sorted accumulation makes the result independent of run order.
  std::vector<double> values(unordered.begin(), unordered.end());
  std::sort(values.begin(), values.end());
  Spread s;
  s.best = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

RunSummary summarize_runs(std::span<const double> aucs,
                          std::span<const double> mc_aucs,
                          std::span<const std::uint64_t> seeds) {
  if (!mc_aucs.empty() && mc_aucs.size() != aucs.size()) {
    throw DataError("run and Monte-Carlo AUC lists differ in length");
  }
  RunSummary r;
  r.runs = spread(aucs);
  if (!mc_aucs.empty()) r.mc = spread(mc_aucs);
  r.seeds.assign(seeds.begin(), seeds.end());
  return r;
}

}  // namespace nmil::eval
