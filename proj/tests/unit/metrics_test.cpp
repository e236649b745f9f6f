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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nmil/common/error.hpp"
#include "nmil/eval/metrics.hpp"
#include "oracle/auc_oracle.hpp"

namespace nmil::eval {
namespace {

using Scored = oracle::ScoredSet;

Scored random_set(std::mt19937_64& rng) { return oracle::random_scored_set(rng); }

TEST(Auc, BasicExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{0, 1, 1}), 0.5);
}

TEST(Auc, FixtureMatchesPairCounting) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const oracle::PairCount c = oracle::count_pairs(s, y);
  EXPECT_EQ(c.twice_wins, 6);
  EXPECT_EQ(auc(s, y), c.value());
  EXPECT_EQ(auc(s, y), 0.75);
}

TEST(Auc, MatchesPairCountingOnRandomSets) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Scored s = random_set(rng);
    ASSERT_EQ(auc(s.scores, s.labels), oracle::count_pairs(s.scores, s.labels).value()) << t;
  }
}

TEST(Auc, MonotoneTransformAndComplement) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Scored s = random_set(rng);
    std::vector<double> warped;
    for (double v : s.scores) warped.push_back(std::exp(3.0 * v) - 7.0);
    EXPECT_EQ(auc(warped, s.labels), auc(s.scores, s.labels));
    std::vector<int> flipped;
    for (int l : s.labels) flipped.push_back(1 - l);
    EXPECT_EQ(auc(s.scores, s.labels) + auc(s.scores, flipped), 1.0);
  }
}

TEST(Auc, RejectsDegenerateInputs) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
  EXPECT_THROW(auc(std::vector<double>{0.1}, std::vector<int>{1, 0}), DataError);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{2, 0}), DataError);
  EXPECT_THROW(auc(std::vector<double>{NAN, 0.2}, std::vector<int>{1, 0}), DataError);
}

TEST(Roc, TrapezoidAreaEqualsAuc) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Scored s = random_set(rng);
    const auto roc = roc_curve(s.scores, s.labels);
    EXPECT_TRUE(std::isinf(roc.front().threshold));
    EXPECT_EQ(roc.back().fpr, 1.0);
    EXPECT_EQ(roc.back().tpr, 1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
      area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
    }
    EXPECT_NEAR(area, auc(s.scores, s.labels), 1e-12);
  }
}

TEST(Summary, ArithmeticExamples) {
  const RunSummary one = summarize_runs(std::vector<double>{0.7}, {});
  EXPECT_EQ(one.runs.best, 0.7);
  EXPECT_EQ(one.runs.mean, 0.7);
  EXPECT_EQ(one.runs.std, 0.0);
  const RunSummary two = summarize_runs(std::vector<double>{0.6, 0.8}, std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(two.runs.mean, 0.7, 1e-15);
  EXPECT_NEAR(two.runs.std, 0.1, 1e-15);
  EXPECT_EQ(two.runs.best, 0.8);
  EXPECT_EQ(two.mc.std, 0.0);
}

TEST(Summary, FiveRunFixture) {
  const std::vector<double> aucs{0.61, 0.72, 0.655, 0.7, 0.58};
  // Mean 3.265 / 5 and population variance recomputed by hand.
  const double mean = 0.653;
  double var = 0.0;
  for (double a : aucs) var += (a - mean) * (a - mean);
  var /= 5.0;
  const RunSummary s = summarize_runs(aucs, {}, std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  EXPECT_NEAR(s.runs.mean, mean, 1e-15);
  EXPECT_NEAR(s.runs.std, std::sqrt(var), 1e-15);
  EXPECT_EQ(s.runs.best, 0.72);
  EXPECT_EQ(s.seeds.size(), 5u);
}

TEST(Summary, PermutationInvariantAndValidated) {
  std::vector<double> aucs{0.61, 0.72, 0.655, 0.7, 0.58};
  const RunSummary a = summarize_runs(aucs, aucs);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(aucs.begin(), aucs.end(), rng);
    const RunSummary b = summarize_runs(aucs, aucs);
    EXPECT_EQ(a.runs.mean, b.runs.mean);
    EXPECT_EQ(a.runs.std, b.runs.std);
    EXPECT_EQ(a.mc.best, b.mc.best);
  }
  EXPECT_THROW(summarize_runs(std::vector<double>{}, {}), DataError);
  EXPECT_THROW(summarize_runs(std::vector<double>{0.5}, std::vector<double>{0.5, 0.6}), DataError);
}

}  // namespace
}  // namespace nmil::eval
