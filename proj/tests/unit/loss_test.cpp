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
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "nmil/autodiff/gradcheck.hpp"
#include "nmil/common/error.hpp"
#include "nmil/loss/losses.hpp"

namespace nmil::loss {
namespace {

using ad::Tensor;

Tensor random_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t({rows, cols});
  for (double& v : t.storage()) v = n(rng);
  return t;
}

ProjBatch random_batch(std::size_t originals, std::size_t dim,
                       std::mt19937_64& rng) {
  ProjBatch b;
  b.z = random_rows(2 * originals, dim, rng);
  b.pairing = half_split_pairing(originals);
  b.tau = 0.07;
  return b;
}

TEST(CosineSim, BasicCases) {
  const std::vector<double> u{1.0, 2.0};
  EXPECT_DOUBLE_EQ(cosine_sim(u, u), 1.0);
  EXPECT_DOUBLE_EQ(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(cosine_sim(u, std::vector<double>{2.0, 4.0}), 1.0);
  EXPECT_THROW(cosine_sim(u, std::vector<double>{0.0, 0.0}), NumericError);
}

TEST(NtXent, SinglePairIsExactlyZero) {
  ProjBatch b;
  b.z = Tensor::matrix(2, 3, {0.3, -1.0, 2.0, 0.1, 0.4, -0.2});
  b.pairing = half_split_pairing(1);
  EXPECT_EQ(nt_xent(b), 0.0);
}

TEST(NtXent, TwoOrthogonalPairsMatchesDirectEvaluation) {
  // Rows ordered z1, z2, z1', z2'. Expected value from a direct numpy
  // evaluation of the loss definition.
  ProjBatch b;
  b.z = Tensor::matrix(4, 2, {1, 0, 0, 1, 1, 0, 0, 1});
  b.pairing = half_split_pairing(2);
  b.tau = 0.07;
  EXPECT_NEAR(nt_xent(b), 1.249749120973656e-06, 1e-12);
}

TEST(NtXent, ScaleInvariance) {
  std::mt19937_64 rng(21);
  ProjBatch b = random_batch(4, 5, rng);
  const double base = nt_xent(b);
  for (double& v : b.z.storage()) v *= 37.5;
  EXPECT_NEAR(nt_xent(b), base, 1e-12);
}

TEST(NtXent, RejectsBadTemperatureAndPairing) {
  std::mt19937_64 rng(1);
  ProjBatch b = random_batch(2, 3, rng);
  b.tau = 0.0;
  EXPECT_THROW(nt_xent(b), ConfigError);
  b.tau = 0.07;
  b.pairing = {1, 0, 3, 3};
  EXPECT_THROW(nt_xent(b), ConfigError);
}

TEST(NtXent, JointPermutationInvariance) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    ProjBatch b = random_batch(5, 4, rng);
    std::vector<std::size_t> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ProjBatch p = b;
    std::vector<std::size_t> inverse(10);
    for (std::size_t i = 0; i < 10; ++i) inverse[perm[i]] = i;
    for (std::size_t i = 0; i < 10; ++i) {
      std::copy(b.z.row(perm[i]).begin(), b.z.row(perm[i]).end(),
                p.z.row(i).begin());
      p.pairing[i] = inverse[b.pairing[perm[i]]];
    }
    EXPECT_NEAR(nt_xent(p), nt_xent(b), 1e-12);
  }
}

TEST(NtXent, DecreasesAsPositivePairAligns) {
  // Rotating z1' toward z1 inside the plane orthogonal to the other views
  // raises sim(z1, z1') and leaves every other similarity unchanged.
  auto loss_at = [](double angle) {
    ProjBatch b;
    b.z = Tensor::matrix(4, 4, {1, 0, 0, 0,
                                0, 0, 1, 0,
                                std::cos(angle), std::sin(angle), 0, 0,
                                0, 0, 0.6, 0.8});
    b.pairing = half_split_pairing(2);
    return nt_xent(b);
  };
  double prev = loss_at(1.5);
  for (double angle = 1.4; angle >= 0.0; angle -= 0.1) {
    const double cur = loss_at(angle);
    EXPECT_LT(cur, prev) << angle;
    prev = cur;
  }
}

TEST(SupCon, DistinctLabelsReduceToNtXent) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    ProjBatch b = random_batch(6, 4, rng);
    b.labels.resize(12);
    for (std::size_t i = 0; i < 6; ++i) b.labels[i] = b.labels[i + 6] = static_cast<int>(i);
    const SupConValue sc = sup_con(b);
    EXPECT_EQ(sc.empty_anchors, 0u);
    EXPECT_NEAR(sc.loss, nt_xent(b), 1e-12);
  }
}

TEST(SupCon, SameClassPairsMatchDirectEvaluation) {
  ProjBatch b;
  b.z = Tensor::matrix(4, 2, {1, 0, 0, 1, 0.8, 0.6, 0.6, 0.8});
  b.pairing = half_split_pairing(2);
  b.labels = {0, 0, 0, 0};
  EXPECT_NEAR(sup_con(b).loss, 3.6980464596868, 1e-11);
}

TEST(SupCon, PermutationInvariance) {
  std::mt19937_64 rng(24);
  ProjBatch b = random_batch(4, 3, rng);
  b.labels = {0, 1, 0, 1, 0, 1, 0, 1};
  // Swap the two originals (and their views).
  ProjBatch p = b;
  const std::vector<std::size_t> perm{1, 0, 2, 3, 5, 4, 6, 7};
  for (std::size_t i = 0; i < 8; ++i) {
    std::copy(b.z.row(perm[i]).begin(), b.z.row(perm[i]).end(), p.z.row(i).begin());
    p.labels[i] = b.labels[perm[i]];
  }
  EXPECT_NEAR(sup_con(p).loss, sup_con(b).loss, 1e-12);
}

TEST(SupCon, UnlabeledAnchorsContributeNothingAndAreCounted) {
  std::mt19937_64 rng(25);
  ProjBatch b = random_batch(2, 3, rng);
  b.labels = {-1, 1, -1, 1};
  const SupConValue v = sup_con(b);
  EXPECT_EQ(v.empty_anchors, 2u);
  EXPECT_TRUE(std::isfinite(v.loss));
}

TEST(MultiTask, Arithmetic) {
  EXPECT_DOUBLE_EQ(multi_task(2.0, 4.0, 1.0, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(multi_task(2.5, 4.0, 1.0, 0.0), 2.5);
  EXPECT_THROW(multi_task(1.0, 1.0, -1.0, 0.5), ConfigError);
}

TEST(CrossEntropy, ReferenceValues) {
  const std::vector<int> zero{0};
  EXPECT_DOUBLE_EQ(cross_entropy(Tensor::matrix(1, 2, {1.0, 0.0}), zero).loss, 0.0);
  EXPECT_DOUBLE_EQ(cross_entropy(Tensor::matrix(1, 2, {0.5, 0.5}), zero).loss,
                   std::log(2.0));
  EXPECT_DOUBLE_EQ(cross_entropy(Tensor::matrix(1, 2, {0.8, 0.2}), zero).loss,
                   -std::log(0.8));
}

TEST(CrossEntropy, ZeroProbabilityIsClampedAndFlagged) {
  const CrossEntropyValue v =
      cross_entropy(Tensor::matrix(1, 2, {0.0, 1.0}), std::vector<int>{0});
  EXPECT_EQ(v.clamped, 1u);
  EXPECT_DOUBLE_EQ(v.loss, -std::log(1e-12));
}

TEST(CrossEntropy, LogitsVersionMatchesProbabilities) {
  ad::Tape tape;
  const std::vector<int> labels{1, 0};
  cross_entropy_logits(tape, tape.input("l"), labels, 2);
  const Tensor logits = Tensor::matrix(2, 2, {0.2, 1.1, -0.3, 0.4});
  const double got = tape.forward({{"l", logits}})[0];
  auto p = [&](std::size_t r, std::size_t c) {
    const double a = std::exp(logits.at(r, 0)), b = std::exp(logits.at(r, 1));
    return (c == 0 ? a : b) / (a + b);
  };
  EXPECT_NEAR(got, -(std::log(p(0, 1)) + std::log(p(1, 0))) / 2.0, 1e-14);
}

TEST(FocalTversky, PerfectPredictionsAreNearZero) {
  const std::vector<double> p{1.0, 0.0, 1.0};
  const std::vector<int> y{1, 0, 1};
  const TverskyParams params{0.7, 1.0};
  // Only the epsilon guard keeps the index below one.
  EXPECT_NEAR(focal_tversky(p, y, params), kTverskyEpsilon / (2.0 + kTverskyEpsilon),
              1e-15);
  EXPECT_LT(focal_tversky(p, y, {0.9, 2.0}), 3e-4);
}

TEST(FocalTversky, HalfAlphaUnitGammaIsOneMinusSoftDice) {
  const std::vector<double> p{0.7, 0.4, 0.1, 0.9};
  const std::vector<int> y{1, 0, 0, 1};
  double tp = 0, fn = 0, fp = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tp += p[i] * y[i];
    fn += (1 - p[i]) * y[i];
    fp += p[i] * (1 - y[i]);
  }
  const double dice = 2 * tp / (2 * tp + fn + fp + 2 * kTverskyEpsilon);
  EXPECT_NEAR(focal_tversky(p, y, {0.5, 1.0}), 1.0 - dice, 1e-14);
}

TEST(FocalTversky, HandEvaluatedReference) {
  // TP = 0.9, FN = 0.1, FP = 0.2; TI = 0.9 / (0.9 + 0.09 + 0.02 + 1e-7).
  EXPECT_NEAR(focal_tversky(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0},
                            {0.9, 2.0}),
              0.3300166349076129, 1e-14);
}

TEST(FocalTversky, NoPositivesIsGuardedNotRejected) {
  const double v = focal_tversky(std::vector<double>{0.2, 0.3},
                                 std::vector<int>{0, 0}, {0.9, 2.0});
  EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(FocalTversky, RejectsInvalidParameters) {
  const std::vector<double> p{0.5};
  const std::vector<int> y{1};
  EXPECT_THROW(focal_tversky(p, y, {1.5, 2.0}), ConfigError);
  EXPECT_THROW(focal_tversky(p, y, {0.5, 0.0}), ConfigError);
}

TEST(FocalTversky, MonotoneInEachProbability) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(6);
    std::vector<int> y(6);
    for (std::size_t i = 0; i < 6; ++i) {
      p[i] = u(rng);
      y[i] = (trial + static_cast<int>(i)) % 2;
    }
    const TverskyParams params{0.3 * (trial % 4), trial % 3 == 0 ? 0.5 : 2.0};
    const double base = focal_tversky(p, y, params);
    for (std::size_t i = 0; i < 6; ++i) {
      std::vector<double> q = p;
      q[i] = std::min(1.0, q[i] + 0.005);
      const double moved = focal_tversky(q, y, params);
      if (y[i] == 1) {
        EXPECT_LE(moved, base + 1e-15);
      } else {
        EXPECT_GE(moved, base - 1e-15);
      }
    }
  }
}

TEST(Gradients, NtXentMatchesFrozenFiniteDifferences) {
  // Central differences (h = 1e-5) computed independently in numpy.
  const Tensor z = Tensor::matrix(4, 3, {0.3, -0.2, 0.9, 0.5, 0.1, -0.4,
                                         0.2, -0.1, 1.0, -0.6, 0.7, 0.2});
  const double expected[12] = {
      2.186766386880201,  0.44276914910046367, -0.6305289854013907,
      5.475276136901463,  -9.224467285307014,  4.537978350138694,
      -1.506151634234065, 2.425179700193958,   0.5437482970993557,
      -2.466583174687287, -4.214247061984366,  7.350115192461536};
  ad::Tape tape;
  const auto pairing = half_split_pairing(2);
  nt_xent(tape, tape.input("z"), pairing, 0.07);
  EXPECT_NEAR(tape.forward({{"z", z}})[0], 2.4533865980228926, 1e-12);
  const ad::Gradients g = tape.backward();
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_NEAR(g.at("z")[i], expected[i], 1e-6 * std::max(1.0, std::abs(expected[i])));
  }
}

TEST(Gradients, LossesPassFiniteDiffCheck) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    {
      ad::Tape tape;
      const auto pairing = half_split_pairing(3);
      std::vector<int> labels{0, 1, 0, 0, 1, 0};
      SupCon sc = sup_con(tape, tape.input("z"), pairing, labels, 0.5);
      tape.set_output(sc.loss);
      const auto r = ad::finite_diff_check(tape, {{"z", random_rows(6, 4, rng)}}, 1e-4);
      EXPECT_TRUE(r.passed()) << "sup_con seed " << seed << " " << r.max_relative_error;
    }
    {
      ad::Tape tape;
      std::uniform_real_distribution<double> u(0.05, 0.95);
      Tensor p({5, 1});
      for (double& v : p.storage()) v = u(rng);
      focal_tversky(tape, tape.input("p"), std::vector<int>{1, 0, 1, 1, 0}, {0.6, 0.5});
      const auto r = ad::finite_diff_check(tape, {{"p", p}}, 1e-4);
      EXPECT_TRUE(r.passed()) << "ftl seed " << seed << " " << r.max_relative_error;
    }
  }
}

}  // namespace
}  // namespace nmil::loss
