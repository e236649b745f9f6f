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
#include <span>
#include <vector>

#include "nmil/autodiff/tape.hpp"
#include "nmil/autodiff/tensor.hpp"

namespace nmil::loss {

// Additive mask that removes self-similarity from a softmax row.
inline constexpr double kMaskedLogit = -1e30;

// Rows of `z` are the 2N views; `pairing[i]` is the row holding the other
// view of the same original. `labels` is per view (empty when unlabeled; a
// negative entry marks an unlabeled view). Rows need not be pre-normalized.
struct ProjBatch {
  ad::Tensor z;
  std::vector<std::size_t> pairing;
  std::vector<int> labels;
  double tau = 0.07;
};

// Views i and i + n of n originals, the layout produced by the pretraining
// loop.
std::vector<std::size_t> half_split_pairing(std::size_t originals);

// Validates that `pairing` is a fixed-point-free involution over 2N rows.
void check_pairing(std::span<const std::size_t> pairing);

double cosine_sim(std::span<const double> u, std::span<const double> v);
ad::Var cosine_sim(ad::Tape& tape, ad::Var u, ad::Var v);

// Unsupervised contrastive loss over all 2N anchors.
ad::Var nt_xent(ad::Tape& tape, ad::Var z,
                std::span<const std::size_t> pairing, double tau);
double nt_xent(const ProjBatch& batch);

// Supervised contrastive loss. Positives of anchor i are every other view
// with the same label; the per-anchor log-likelihoods are averaged over
// |P(i)| and the result is scaled by 1/2N. Anchors with no positive
// contribute zero and are counted in `empty_anchors`.
struct SupCon {
  ad::Var loss;
  std::size_t empty_anchors = 0;
};
SupCon sup_con(ad::Tape& tape, ad::Var z, std::span<const std::size_t> pairing,
               std::span<const int> labels, double tau);

struct SupConValue {
  double loss = 0.0;
  std::size_t empty_anchors = 0;
};
SupConValue sup_con(const ProjBatch& batch);

ad::Var multi_task(ad::Tape& tape, ad::Var contrastive, ad::Var cross_entropy,
                   double alpha_c, double alpha_ce);
double multi_task(double contrastive, double cross_entropy, double alpha_c,
                  double alpha_ce);

// Row-wise log-softmax via max subtraction.
ad::Var log_softmax_rows(ad::Tape& tape, ad::Var logits);

// Mean negative log-likelihood of `labels` under row-wise softmax(logits).
ad::Var cross_entropy_logits(ad::Tape& tape, ad::Var logits,
                             std::span<const int> labels, std::size_t classes);

struct CrossEntropyValue {
  double loss = 0.0;
  std::size_t clamped = 0;  // rows whose true-class probability hit 1e-12
};
// `probs` is n x C with rows summing to one.
CrossEntropyValue cross_entropy(const ad::Tensor& probs,
                                std::span<const int> labels);

struct TverskyParams {
  double alpha = 0.9;
  double gamma = 2.0;
};
inline constexpr double kTverskyEpsilon = 1e-7;

void check_tversky(const TverskyParams& params);

// Batch-level Focal Tversky loss over positive-class probabilities:
// (1 - TP / (TP + alpha FN + (1 - alpha) FP + eps))^(1/gamma).
ad::Var focal_tversky(ad::Tape& tape, ad::Var probs,
                      std::span<const int> labels, const TverskyParams& params);
double focal_tversky(std::span<const double> probs, std::span<const int> labels,
                     const TverskyParams& params);

}  // namespace nmil::loss
