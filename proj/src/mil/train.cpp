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

#include "nmil/mil/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "nmil/common/error.hpp"
#include "nmil/common/log.hpp"
#include "nmil/common/parallel.hpp"
#include "nmil/common/rng.hpp"
#include "nmil/eval/metrics.hpp"
#include "nmil/loss/losses.hpp"

namespace nmil::mil {
namespace {

constexpr std::uint64_t kOrderStream = 31;
constexpr std::uint64_t kDropoutStream = 32;
// Epoch tag for the fixed validation subsample; training epochs count from 0.
constexpr std::uint64_t kEvalEpoch = ~std::uint64_t{0};

std::vector<data::NestedBag> subsample_all(const std::vector<data::NestedBag>& bags,
                                           std::size_t n_b, std::uint64_t seed,
                                           std::uint64_t epoch) {
  std::vector<data::NestedBag> out;
  out.reserve(bags.size());
  for (const data::NestedBag& b : bags) out.push_back(data::subsample_bag(b, n_b, seed, epoch));
  return out;
}

double batch_step(const MilModel& model, const std::vector<const data::NestedBag*>& batch,
                  const TrainConfig& cfg, Rng& dropout_rng, ad::Gradients& grads) {
  ad::Tape tape;
  ad::ParamBinder params(tape);
  ad::TensorMap inputs = model.params;
  std::vector<ad::Var> probs;
  std::vector<int> labels;
  const bool vote = model.spec.aggregator == Aggregator::kVote;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const data::NestedBag& bag = *batch[i];
    const std::string tag = "b" + std::to_string(i);
    const BagVars v = bag_on_tape(params, model, tag, bag.regions.size(),
                                  ad::Dropout{cfg.dropout, &dropout_rng, 1});
    bind_bag(inputs, model, tag, bag);
    if (vote) {
      probs.push_back(v.instance_probs);
      labels.insert(labels.end(), bag.instance_count(), bag.label);
    } else {
      probs.push_back(v.prob);
      labels.push_back(bag.label);
    }
  }
  const ad::Var all = probs.size() == 1 ? probs.front() : tape.concat(probs, ad::Axis::k0);
  tape.set_output(loss::focal_tversky(tape, all, labels, {cfg.alpha, cfg.gamma}));
  const double value = tape.forward(inputs)[0];
  grads = tape.backward();
  return value;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (n_b == 0 || eval_n_b == 0) throw ConfigError("bag sampling size n_b must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  loss::check_tversky({alpha, gamma});
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (patience == 0) throw ConfigError("patience must be >= 1");
  if (runs == 0) throw ConfigError("runs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
}

ModelSpec TrainConfig::model_spec(Aggregator aggregator, Fusion fusion,
                                  std::size_t feature_dim, std::size_t clinical_dim) const {
  ModelSpec s;
  s.aggregator = aggregator;
  s.fusion = fusion;
  s.feature_dim = feature_dim;
  s.clinical_dim = clinical_dim;
  s.psi_hidden = psi_hidden;
  s.n_att = n_att;
  s.head_hidden = head_hidden;
  return s;
}

std::vector<double> predict_scores(const MilModel& model,
                                   const std::vector<data::NestedBag>& bags) {
  std::vector<double> scores;
  scores.reserve(bags.size());
  for (const data::NestedBag& b : bags) scores.push_back(predict(model, b).score);
  return scores;
}

std::vector<int> bag_labels(const std::vector<data::NestedBag>& bags) {
  std::vector<int> labels;
  labels.reserve(bags.size());
  for (const data::NestedBag& b : bags) labels.push_back(b.label);
  return labels;
}

double evaluate_auc(const MilModel& model, const std::vector<data::NestedBag>& bags) {
  return eval::auc(predict_scores(model, bags), bag_labels(bags));
}

TrainResult train_mil(const data::Dataset& ds, const ModelSpec& spec,
                      const TrainConfig& cfg) {
  cfg.validate();
  if (ds.train.empty()) throw DataError("training split is empty");
  const std::vector<int> val_labels = bag_labels(ds.val);
  {
    const auto pos = std::count(val_labels.begin(), val_labels.end(), 1);
    if (pos == 0 || static_cast<std::size_t>(pos) == val_labels.size()) {
      throw DataError("validation split needs both bag classes for early stopping");
    }
  }

  TrainResult result;
  MilModel model = init_model(spec, cfg.seed);
  const std::vector<data::NestedBag> val = subsample_all(ds.val, cfg.eval_n_b, cfg.seed, kEvalEpoch);
  ad::Optimizer opt({cfg.optimizer, cfg.learning_rate});
  Rng dropout_rng = make_rng(cfg.seed, kDropoutStream);
  std::vector<std::size_t> order(ds.train.size());
  result.model = model;
  double best = -1.0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng = make_rng(derive_seed(cfg.seed, epoch), kOrderStream);
    std::shuffle(order.begin(), order.end(), order_rng);

    double weighted = 0.0;
    for (std::size_t start = 0, batch_index = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<data::NestedBag> sampled;
      sampled.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        sampled.push_back(data::subsample_bag(ds.train[order[i]], cfg.n_b, cfg.seed, epoch));
      }
      std::vector<const data::NestedBag*> batch;
      for (const data::NestedBag& b : sampled) batch.push_back(&b);
      ad::Gradients grads;
      double value = 0.0;
      try {
        value = batch_step(model, batch, cfg, dropout_rng, grads);
      } catch (const NumericError& e) {
        throw NumericError(fmt::format("epoch {} batch {}: {}", epoch + 1, batch_index, e.what()));
      }
      for (const auto& [name, g] : grads) {
        if (!g.all_finite()) {
          throw NumericError(fmt::format("epoch {} batch {}: non-finite gradient for '{}'",
                                         epoch + 1, batch_index, name));
        }
      }
      opt.step(model.params, grads);
      weighted += value * static_cast<double>(end - start);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = weighted / static_cast<double>(order.size());
    rec.val_auc = eval::auc(predict_scores(model, val), val_labels);
    result.history.push_back(rec);
    logger()->debug("mil {} epoch {} loss {:.6f} val_auc {:.4f}",
                    aggregator_name(spec.aggregator), rec.epoch, rec.train_loss, rec.val_auc);
    if (rec.val_auc > best) {
      best = rec.val_auc;
      result.best_epoch = rec.epoch;
      result.model.params = model.params;
    } else if (rec.epoch - result.best_epoch >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_val_auc = best;
  return result;
}

std::vector<TrainResult> train_runs(const data::Dataset& ds, const ModelSpec& spec,
                                    const TrainConfig& config, std::size_t jobs) {
  config.validate();
  std::vector<TrainResult> out(config.runs);
  parallel_for(config.runs, jobs, [&](std::size_t run) {
    TrainConfig c = config;
    c.seed = config.seed + run;
    out[run] = train_mil(ds, spec, c);
  });
  return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_auc\n";
  for (const EpochRecord& r : history) {
    os << fmt::format("{},{:.17g},{:.17g}\n", r.epoch, r.train_loss, r.val_auc);
  }
  return os.str();
}

std::string_view optimizer_name(ad::OptimizerKind kind) {
  return kind == ad::OptimizerKind::kSgd ? "sgd" : "adam";
}

ad::OptimizerKind parse_optimizer(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "sgd") return ad::OptimizerKind::kSgd;
  if (n == "adam") return ad::OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

namespace {

nlohmann::json bag_size_json(std::size_t n) {
  if (n == data::kWholeBag) return "L";
  return n;
}

std::size_t bag_size_from(const nlohmann::json& j, const char* key) {
  if (j.is_string() && j.get<std::string>() == "L") return data::kWholeBag;
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  throw ConfigError(std::string(key) + " must be a positive integer or \"L\"");
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"optimizer", optimizer_name(c.optimizer)},
          {"n_b", bag_size_json(c.n_b)},
          {"dropout", c.dropout},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"psi_hidden", c.psi_hidden},
          {"n_att", c.n_att},
          {"head_hidden", c.head_hidden},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"runs", c.runs},
          {"batch_size", c.batch_size},
          {"eval_n_b", bag_size_json(c.eval_n_b)},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  TrainConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") c.learning_rate = field<double>(j, "learning_rate");
    else if (key == "optimizer") c.optimizer = parse_optimizer(field<std::string>(j, "optimizer"));
    else if (key == "n_b") c.n_b = bag_size_from(value, "n_b");
    else if (key == "dropout") c.dropout = field<double>(j, "dropout");
    else if (key == "alpha") c.alpha = field<double>(j, "alpha");
    else if (key == "gamma") c.gamma = field<double>(j, "gamma");
    else if (key == "psi_hidden") c.psi_hidden = field<std::vector<std::size_t>>(j, "psi_hidden");
    else if (key == "n_att") c.n_att = field<std::size_t>(j, "n_att");
    else if (key == "head_hidden") c.head_hidden = field<std::vector<std::size_t>>(j, "head_hidden");
    else if (key == "max_epochs") c.max_epochs = field<std::size_t>(j, "max_epochs");
    else if (key == "patience") c.patience = field<std::size_t>(j, "patience");
    else if (key == "runs") c.runs = field<std::size_t>(j, "runs");
    else if (key == "batch_size") c.batch_size = field<std::size_t>(j, "batch_size");
    else if (key == "eval_n_b") c.eval_n_b = bag_size_from(value, "eval_n_b");
    else if (key == "seed") c.seed = field<std::uint64_t>(j, "seed");
    else throw ConfigError("unknown training config key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace nmil::mil
