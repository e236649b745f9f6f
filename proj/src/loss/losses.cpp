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

#include "nmil/loss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmil/common/error.hpp"

namespace nmil::loss {
namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) {
    throw ConfigError("temperature must be positive, got " +
                      std::to_string(tau));
  }
}

// 2N x 2N similarity logits with the diagonal masked out.
ad::Var masked_logits(ad::Tape& tape, ad::Var z, std::size_t views,
                      double tau) {
  ad::Var zn = tape.l2_normalize(z, ad::Axis::k1);
  ad::Var sim = tape.matmul(zn, zn, false, true);
  ad::Tensor mask({views, views}, 0.0);
  for (std::size_t i = 0; i < views; ++i) mask.at(i, i) = kMaskedLogit;
  return tape.add(tape.scale(sim, 1.0 / tau), tape.constant(std::move(mask)));
}

template <typename Build>
double evaluate(const ad::Tensor& z, Build build) {
  ad::Tape tape;
  ad::Var zv = tape.input("z", false);
  build(tape, zv);
  return tape.forward({{"z", z}})[0];
}

}  // namespace

std::vector<std::size_t> half_split_pairing(std::size_t originals) {
  std::vector<std::size_t> pairing(2 * originals);
  for (std::size_t i = 0; i < originals; ++i) {
    pairing[i] = i + originals;
    pairing[i + originals] = i;
  }
  return pairing;
}

void check_pairing(std::span<const std::size_t> pairing) {
  const std::size_t n = pairing.size();
  if (n < 2 || n % 2 != 0) {
    throw ConfigError("contrastive batch needs an even number (>= 2) of views, got " +
                      std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pairing[i];
    if (j >= n || j == i || pairing[j] != i) {
      throw ConfigError("pairing is not a perfect matching at view " +
                        std::to_string(i));
    }
  }
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine_sim of vectors with lengths " +
                     std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (!(uu > 0.0) || !(vv > 0.0)) {
    throw NumericError("cosine_sim of a zero vector");
  }
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

ad::Var cosine_sim(ad::Tape& tape, ad::Var u, ad::Var v) {
  return tape.reduce_sum(tape.multiply(tape.l2_normalize(u, ad::Axis::kAll),
                                       tape.l2_normalize(v, ad::Axis::kAll)));
}

ad::Var nt_xent(ad::Tape& tape, ad::Var z, std::span<const std::size_t> pairing,
                double tau) {
  check_tau(tau);
  check_pairing(pairing);
  const std::size_t views = pairing.size();
  ad::Var probs = tape.softmax(masked_logits(tape, z, views, tau), ad::Axis::k1);
  ad::Tensor partner({views, views}, 0.0);
  for (std::size_t i = 0; i < views; ++i) partner.at(i, pairing[i]) = 1.0;
  ad::Var positive = tape.reduce_sum(
      tape.multiply(probs, tape.constant(std::move(partner))), ad::Axis::k1);
  return tape.scale(tape.reduce_mean(tape.log(positive)), -1.0);
}

double nt_xent(const ProjBatch& batch) {
  return evaluate(batch.z, [&](ad::Tape& tape, ad::Var z) {
    nt_xent(tape, z, batch.pairing, batch.tau);
  });
}

SupCon sup_con(ad::Tape& tape, ad::Var z, std::span<const std::size_t> pairing,
               std::span<const int> labels, double tau) {
  check_tau(tau);
  check_pairing(pairing);
  const std::size_t views = pairing.size();
  if (labels.size() != views) {
    throw ConfigError("sup_con needs one label per view: " +
                      std::to_string(labels.size()) + " labels for " +
                      std::to_string(views) + " views");
  }
  SupCon out;
  ad::Tensor weights({views, views}, 0.0);
  for (std::size_t i = 0; i < views; ++i) {
    std::size_t positives = 0;
    if (labels[i] >= 0) {
      for (std::size_t p = 0; p < views; ++p) {
        if (p != i && labels[p] == labels[i]) ++positives;
      }
    }
    if (positives == 0) {
      ++out.empty_anchors;
      continue;
    }
    const double w = 1.0 / static_cast<double>(positives);
    for (std::size_t p = 0; p < views; ++p) {
      if (p != i && labels[p] == labels[i]) weights.at(i, p) = w;
    }
  }
  ad::Var log_probs = log_softmax_rows(tape, masked_logits(tape, z, views, tau));
  ad::Var total = tape.reduce_sum(
      tape.multiply(log_probs, tape.constant(std::move(weights))));
  out.loss = tape.scale(total, -1.0 / static_cast<double>(views));
  return out;
}

SupConValue sup_con(const ProjBatch& batch) {
  SupConValue value;
  value.loss = evaluate(batch.z, [&](ad::Tape& tape, ad::Var z) {
    value.empty_anchors =
        sup_con(tape, z, batch.pairing, batch.labels, batch.tau).empty_anchors;
  });
  return value;
}

ad::Var multi_task(ad::Tape& tape, ad::Var contrastive, ad::Var cross_entropy,
                   double alpha_c, double alpha_ce) {
  if (alpha_c < 0.0 || alpha_ce < 0.0) {
    throw ConfigError("multi-task weights must be nonnegative");
  }
  return tape.add(tape.scale(contrastive, alpha_c),
                  tape.scale(cross_entropy, alpha_ce));
}

double multi_task(double contrastive, double cross_entropy, double alpha_c,
                  double alpha_ce) {
  if (alpha_c < 0.0 || alpha_ce < 0.0) {
    throw ConfigError("multi-task weights must be nonnegative");
  }
  return alpha_c * contrastive + alpha_ce * cross_entropy;
}

ad::Var log_softmax_rows(ad::Tape& tape, ad::Var logits) {
  ad::Var shifted =
      tape.subtract(logits, tape.reduce_max(logits, ad::Axis::k1));
  ad::Var lse =
      tape.log(tape.reduce_sum(tape.exp(shifted), ad::Axis::k1));
  return tape.subtract(shifted, lse);
}

ad::Var cross_entropy_logits(ad::Tape& tape, ad::Var logits,
                             std::span<const int> labels, std::size_t classes) {
  if (labels.empty()) throw ConfigError("cross entropy over an empty batch");
  ad::Tensor onehot({labels.size(), classes}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw ConfigError("cross entropy label out of range at row " +
                        std::to_string(i));
    }
    onehot.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  ad::Var picked = tape.reduce_sum(
      tape.multiply(log_softmax_rows(tape, logits),
                    tape.constant(std::move(onehot))));
  return tape.scale(picked, -1.0 / static_cast<double>(labels.size()));
}

CrossEntropyValue cross_entropy(const ad::Tensor& probs,
                                std::span<const int> labels) {
  if (probs.rows() != labels.size() || labels.empty()) {
    throw ShapeError("cross entropy: " + probs.shape_string() + " probs for " +
                     std::to_string(labels.size()) + " labels");
  }
  CrossEntropyValue out;
  const std::size_t classes = probs.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw ConfigError("cross entropy label out of range at row " +
                        std::to_string(i));
    }
    double p = probs.at(i, static_cast<std::size_t>(labels[i]));
    if (p < 1e-12) {
      p = 1e-12;
      ++out.clamped;
    }
    total -= std::log(p);
  }
  out.loss = total / static_cast<double>(labels.size());
  return out;
}

void check_tversky(const TverskyParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    throw ConfigError("Tversky alpha must lie in [0, 1]");
  }
  if (!(params.gamma > 0.0)) throw ConfigError("Tversky gamma must be > 0");
}

ad::Var focal_tversky(ad::Tape& tape, ad::Var probs,
                      std::span<const int> labels, const TverskyParams& params) {
  check_tversky(params);
  if (labels.empty()) throw ConfigError("focal Tversky over an empty batch");
  ad::Tensor truth({labels.size(), 1});
  double positives = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    truth[i] = labels[i] == 1 ? 1.0 : 0.0;
    positives += truth[i];
  }
  ad::Var tp = tape.reduce_sum(tape.multiply(probs, tape.constant(std::move(truth))));
  ad::Var fn = tape.subtract(tape.scalar(positives), tp);
  ad::Var fp = tape.subtract(tape.reduce_sum(probs), tp);
  ad::Var denom = tape.shift(
      tape.add(tp, tape.add(tape.scale(fn, params.alpha),
                            tape.scale(fp, 1.0 - params.alpha))),
      kTverskyEpsilon);
  ad::Var index = tape.divide(tp, denom);
  return tape.power(tape.one_minus(index), 1.0 / params.gamma);
}

double focal_tversky(std::span<const double> probs, std::span<const int> labels,
                     const TverskyParams& params) {
  if (probs.size() != labels.size()) {
    throw ShapeError("focal Tversky: " + std::to_string(probs.size()) +
                     " probs for " + std::to_string(labels.size()) + " labels");
  }
  ad::Tape tape;
  ad::Var p = tape.input("p", false);
  focal_tversky(tape, p, labels, params);
  ad::Tensor pt({probs.size(), 1});
  std::copy(probs.begin(), probs.end(), pt.storage().begin());
  return tape.forward({{"p", pt}})[0];
}

}  // namespace nmil::loss
