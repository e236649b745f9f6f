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

#include "nmil/encoder/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nmil/autodiff/tape.hpp"
#include "nmil/common/error.hpp"
#include "nmil/common/log.hpp"
#include "nmil/common/rng.hpp"
#include "nmil/loss/losses.hpp"

namespace nmil::enc {
namespace {

constexpr std::uint64_t kOrderStream = 11;

std::vector<double> pool_std(const ad::Tensor& x) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += x.at(i, j);
  }
  for (double& v : mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x.at(i, j) - mean[j];
      sd[j] += d * d;
    }
  }
  for (double& v : sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }
  return sd;
}

ad::Var batch_loss(ad::Tape& tape, const EncoderStack& stack, PretrainMode mode,
                   const PretrainConfig& cfg, std::span<const std::size_t> pairing,
                   std::span<const int> labels) {
  ad::ParamBinder params(tape);
  const ad::Var x = tape.input("X", false);
  const ad::Var h = ad::mlp_on_tape(params, stack.g, x);
  auto projections = [&] {
    return tape.l2_normalize(ad::mlp_on_tape(params, stack.f, h), ad::Axis::k1);
  };
  auto cross_entropy = [&] {
    return loss::cross_entropy_logits(tape, ad::mlp_on_tape(params, stack.c, h),
                                      labels, stack.classes());
  };
  switch (mode) {
    case PretrainMode::kC: return loss::nt_xent(tape, projections(), pairing, cfg.tau);
    case PretrainMode::kSC:
      return loss::sup_con(tape, projections(), pairing, labels, cfg.tau).loss;
    case PretrainMode::kCE: return cross_entropy();
    case PretrainMode::kMulti: {
      const ad::Var c = loss::nt_xent(tape, projections(), pairing, cfg.tau);
      return loss::multi_task(tape, c, cross_entropy(), cfg.alpha_c, cfg.alpha_ce);
    }
    case PretrainMode::kI: break;
  }
  throw std::logic_error("batch_loss called for mode I");
}

}  // namespace

void PretrainConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (batch_size == 0) throw ConfigError("pretraining batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(alpha_c >= 0.0 && alpha_ce >= 0.0)) {
    throw ConfigError("multi-task weights must be non-negative");
  }
  augmenter.validate();
}

InstancePool collect_instances(const std::vector<data::NestedBag>& bags) {
  InstancePool pool;
  std::size_t n = 0, m = 0;
  bool labelled = true;
  for (const data::NestedBag& b : bags) {
    for (const data::Region& r : b.regions) {
      if (n == 0) m = r.dim();
      if (r.dim() != m) throw DataError("instances of mixed dimension in pretraining pool");
      n += r.size();
      labelled = labelled && r.instance_labels.size() == r.size();
    }
  }
  if (n == 0) throw DataError("pretraining pool is empty");
  std::vector<double> values;
  values.reserve(n * m);
  for (const data::NestedBag& b : bags) {
    for (const data::Region& r : b.regions) {
      values.insert(values.end(), r.instances.storage().begin(),
                    r.instances.storage().end());
      if (labelled) {
        pool.labels.insert(pool.labels.end(), r.instance_labels.begin(),
                           r.instance_labels.end());
      }
    }
  }
  pool.x = ad::Tensor({n, m}, std::move(values));
  return pool;
}

PretrainResult pretrain(const InstancePool& pool, PretrainMode mode,
                        const PretrainConfig& config, EncoderStack init) {
  config.validate();
  PretrainResult result;
  result.stack = std::move(init);
  EncoderStack& stack = result.stack;
  if (pool.size() == 0) throw DataError("pretraining pool is empty");
  if (pool.x.cols() != stack.input_dim()) {
    throw DataError("pretraining pool has dimension " + std::to_string(pool.x.cols()) +
                    ", encoder expects " + std::to_string(stack.input_dim()));
  }
  if (mode == PretrainMode::kI) {
    stack.mode = mode;
    return result;
  }
  if (needs_labels(mode)) {
    if (pool.labels.size() != pool.size()) {
      throw ConfigError("pretraining mode " + std::string(mode_name(mode)) +
                        " requires instance labels");
    }
    for (int l : pool.labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= stack.classes()) {
        throw DataError("instance label " + std::to_string(l) + " outside [0, " +
                        std::to_string(stack.classes()) + ")");
      }
    }
  }

  VectorAugmenter aug = config.augmenter;
  if (aug.feature_std.empty()) aug.feature_std = pool_std(pool.x);

  const std::size_t n = pool.size();
  const std::size_t m = pool.x.cols();
  const std::size_t per_epoch = config.max_instances_per_epoch == 0
                                    ? n
                                    : std::min(n, config.max_instances_per_epoch);
  ad::Optimizer opt({config.optimizer, config.learning_rate});
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(derive_seed(config.seed, epoch), kOrderStream);
    std::shuffle(order.begin(), order.end(), rng);

    double weighted = 0.0;
    for (std::size_t start = 0; start < per_epoch; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, per_epoch - start);
      ad::Tensor x({2 * b, m});
      std::vector<int> labels;
      if (needs_labels(mode)) labels.resize(2 * b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t idx = order[start + i];
        const std::uint64_t item = epoch * n + idx;
        const auto [v0, v1] = augment_pair(pool.x.row(idx), aug, item);
        std::copy(v0.begin(), v0.end(), x.row(i).begin());
        std::copy(v1.begin(), v1.end(), x.row(b + i).begin());
        if (!labels.empty()) labels[i] = labels[b + i] = pool.labels[idx];
      }
      const std::vector<std::size_t> pairing = loss::half_split_pairing(b);
      ad::Tape tape;
      tape.set_output(batch_loss(tape, stack, mode, config, pairing, labels));
      ad::TensorMap inputs = stack.params;
      inputs.emplace("X", std::move(x));
      const double value = tape.forward(inputs)[0];
      opt.step(stack.params, tape.backward());
      weighted += value * static_cast<double>(b);
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(per_epoch));
    logger()->debug("pretrain {} epoch {} loss {:.6f}", mode_name(mode), epoch,
                   result.epoch_loss.back());
  }
  stack.mode = mode;
  return result;
}

PretrainResult pretrain(const data::Dataset& ds, PretrainMode mode,
                        const PretrainConfig& config, EncoderStack init) {
  if (mode == PretrainMode::kI) {
    init.mode = mode;
    return {std::move(init), {}};
  }
  return pretrain(collect_instances(ds.train), mode, config, std::move(init));
}

}  // namespace nmil::enc
