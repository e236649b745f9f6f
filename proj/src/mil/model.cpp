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

#include "nmil/mil/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "nmil/autodiff/kernels.hpp"
#include "nmil/autodiff/serialize.hpp"
#include "nmil/common/error.hpp"
#include "nmil/common/rng.hpp"

namespace nmil::mil {
namespace {

// One init stream per component, so models that share a component (AbMIL
// and NMIA share region attention and Psi) start from the same values.
constexpr std::uint64_t kAttentionStream = 21;
constexpr std::uint64_t kBagAttentionStream = 22;
constexpr std::uint64_t kPsiStream = 23;
constexpr std::uint64_t kHeadStream = 24;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string region_name(const std::string& tag, std::size_t k) {
  return tag + ".r" + std::to_string(k);
}

}  // namespace

std::string_view aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::kVote: return "vote";
    case Aggregator::kMean: return "mean";
    case Aggregator::kMax: return "max";
    case Aggregator::kAbMil: return "abmil";
    case Aggregator::kNmia: return "nmia";
  }
  return "?";
}

Aggregator parse_aggregator(std::string_view name) {
  const std::string n = lower(name);
  for (Aggregator a : {Aggregator::kVote, Aggregator::kMean, Aggregator::kMax,
                       Aggregator::kAbMil, Aggregator::kNmia}) {
    if (n == aggregator_name(a)) return a;
  }
  throw ConfigError("unknown aggregator '" + std::string(name) +
                    "' (expected vote, mean, max, abmil or nmia)");
}

std::string_view fusion_name(Fusion f) {
  switch (f) {
    case Fusion::kImage: return "image";
    case Fusion::kClinical: return "clinical";
    case Fusion::kBoth: return "both";
  }
  return "?";
}

Fusion parse_fusion(std::string_view name) {
  const std::string n = lower(name);
  for (Fusion f : {Fusion::kImage, Fusion::kClinical, Fusion::kBoth}) {
    if (n == fusion_name(f)) return f;
  }
  throw ConfigError("unknown fusion '" + std::string(name) +
                    "' (expected image, clinical or both)");
}

bool has_attention(Aggregator a) noexcept {
  return a == Aggregator::kAbMil || a == Aggregator::kNmia;
}

void init_attention(const GatedAttention& att, Rng& rng, ad::TensorMap& params) {
  const double limit = std::sqrt(6.0 / static_cast<double>(att.n_att + att.dim));
  auto fill = [&](ad::Tensor t, double lim) {
    for (double& v : t.storage()) v = (2.0 * uniform01(rng) - 1.0) * lim;
    return t;
  };
  params[att.v()] = fill(ad::Tensor({att.n_att, att.dim}), limit);
  params[att.u()] = fill(ad::Tensor({att.n_att, att.dim}), limit);
  params[att.w()] = fill(ad::Tensor({att.n_att, 1}),
                         std::sqrt(6.0 / static_cast<double>(att.n_att + 1)));
}

AttentionVars gated_attention(ad::ParamBinder& params, const GatedAttention& att,
                              ad::Var h) {
  ad::Tape& tape = params.tape();
  const ad::Var t = tape.tanh(tape.matmul(h, params(att.v()), false, true));
  const ad::Var s = tape.sigmoid(tape.matmul(h, params(att.u()), false, true));
  const ad::Var scores = tape.matmul(tape.multiply(t, s), params(att.w()));
  const ad::Var a = tape.softmax(scores, ad::Axis::k0);
  return {a, tape.matmul(a, h, true, false)};
}

AttentionValue gated_attention(const ad::Tensor& h, const ad::TensorMap& params,
                               const GatedAttention& att) {
  namespace k = ad::kernels;
  const ad::Tensor t = k::tanh(k::matmul(h, params.at(att.v()), false, true));
  const ad::Tensor s = k::sigmoid(k::matmul(h, params.at(att.u()), false, true));
  const ad::Tensor a =
      k::softmax(k::matmul(k::multiply(t, s), params.at(att.w())), ad::Axis::k0);
  const ad::Tensor z = k::matmul(a, h, true, false);
  return {a.storage(), z.storage()};
}

ad::Tensor pool(const ad::Tensor& h, PoolMode mode) {
  if (h.rows() == 0) throw DataError("cannot pool an empty bag");
  return mode == PoolMode::kMean ? ad::kernels::reduce_mean(h, ad::Axis::k0)
                                 : ad::kernels::reduce_max(h, ad::Axis::k0);
}

double majority_vote(const std::vector<double>& instance_probs) {
  if (instance_probs.empty()) throw DataError("majority vote over an empty bag");
  std::size_t votes = 0;
  for (double p : instance_probs) votes += p > 0.5 ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(instance_probs.size());
}

void ModelSpec::validate() const {
  if (fusion != Fusion::kClinical && feature_dim == 0) {
    throw ConfigError("model needs a positive feature dimension");
  }
  if (fusion != Fusion::kImage && clinical_dim == 0) {
    throw ConfigError(std::string("fusion=") + std::string(fusion_name(fusion)) +
                      " needs non-empty clinical vectors");
  }
  if (aggregator == Aggregator::kVote && fusion != Fusion::kImage) {
    throw ConfigError("majority voting works on instances only (fusion=image)");
  }
  if (has_attention(aggregator) && n_att == 0) {
    throw ConfigError("attention width n_att must be >= 1");
  }
  for (std::size_t w : psi_hidden) {
    if (w == 0) throw ConfigError("classifier hidden widths must be >= 1");
  }
  for (std::size_t w : head_hidden) {
    if (w == 0) throw ConfigError("instance head widths must be >= 1");
  }
}

std::size_t ModelSpec::psi_input() const {
  switch (fusion) {
    case Fusion::kImage: return feature_dim;
    case Fusion::kClinical: return clinical_dim;
    case Fusion::kBoth: return feature_dim + clinical_dim;
  }
  return 0;
}

MilModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  MilModel m;
  m.spec = spec;
  m.seed = seed;
  m.attention = {"A", spec.n_att, spec.feature_dim};
  m.bag_attention = {"B", spec.n_att, spec.feature_dim};
  m.psi.prefix = "P";
  m.psi.widths.push_back(spec.psi_input());
  m.psi.widths.insert(m.psi.widths.end(), spec.psi_hidden.begin(), spec.psi_hidden.end());
  m.psi.widths.push_back(1);
  m.head.prefix = "I";
  m.head.widths.push_back(spec.feature_dim);
  m.head.widths.insert(m.head.widths.end(), spec.head_hidden.begin(), spec.head_hidden.end());
  m.head.widths.push_back(1);

  const bool uses_bag = spec.fusion != Fusion::kClinical;
  if (spec.aggregator == Aggregator::kVote) {
    Rng rng = make_rng(seed, kHeadStream);
    ad::init_mlp(m.head, rng, m.params);
    return m;
  }
  if (uses_bag && has_attention(spec.aggregator)) {
    Rng rng = make_rng(seed, kAttentionStream);
    init_attention(m.attention, rng, m.params);
  }
  if (uses_bag && spec.aggregator == Aggregator::kNmia) {
    Rng rng = make_rng(seed, kBagAttentionStream);
    init_attention(m.bag_attention, rng, m.params);
  }
  Rng rng = make_rng(seed, kPsiStream);
  ad::init_mlp(m.psi, rng, m.params);
  return m;
}

BagVars bag_on_tape(ad::ParamBinder& params, const MilModel& model,
                    const std::string& tag, std::size_t regions,
                    const ad::Dropout& psi_dropout) {
  if (regions == 0) throw DataError("bag '" + tag + "' has no regions");
  ad::Tape& tape = params.tape();
  const ModelSpec& spec = model.spec;
  BagVars out;

  std::vector<ad::Var> parts;
  for (std::size_t k = 0; k < regions; ++k) {
    parts.push_back(tape.input(region_name(tag, k), false));
  }
  auto all_instances = [&] {
    return parts.size() == 1 ? parts.front() : tape.concat(parts, ad::Axis::k0);
  };

  if (spec.aggregator == Aggregator::kVote) {
    out.instance_probs =
        tape.sigmoid(ad::mlp_on_tape(params, model.head, all_instances()));
    return out;
  }

  ad::Var z{};
  if (spec.fusion != Fusion::kClinical) {
    switch (spec.aggregator) {
      case Aggregator::kMean: z = tape.reduce_mean(all_instances(), ad::Axis::k0); break;
      case Aggregator::kMax: z = tape.reduce_max(all_instances(), ad::Axis::k0); break;
      case Aggregator::kAbMil: {
        const AttentionVars a = gated_attention(params, model.attention, all_instances());
        out.region_attention.push_back(a.weights);
        z = a.embedding;
        break;
      }
      case Aggregator::kNmia: {
        std::vector<ad::Var> region_embeddings;
        for (ad::Var h : parts) {
          const AttentionVars a = gated_attention(params, model.attention, h);
          out.region_attention.push_back(a.weights);
          region_embeddings.push_back(a.embedding);
        }
        const ad::Var stacked = region_embeddings.size() == 1
                                    ? region_embeddings.front()
                                    : tape.concat(region_embeddings, ad::Axis::k0);
        const AttentionVars b = gated_attention(params, model.bag_attention, stacked);
        out.bag_attention = b.weights;
        out.has_bag_attention = true;
        z = b.embedding;
        break;
      }
      case Aggregator::kVote: break;
    }
  }

  ad::Var psi_in = z;
  if (spec.fusion != Fusion::kImage) {
    const ad::Var c = tape.input(tag + ".c", false);
    psi_in = spec.fusion == Fusion::kClinical ? c : tape.concat({z, c}, ad::Axis::k1);
  }
  ad::Dropout d = psi_dropout;
  d.rows = 1;
  out.prob = tape.sigmoid(ad::mlp_on_tape(params, model.psi, psi_in, d));
  return out;
}

void bind_bag(ad::TensorMap& inputs, const MilModel& model, const std::string& tag,
              const data::NestedBag& bag) {
  const ModelSpec& spec = model.spec;
  if (bag.regions.empty()) throw DataError("bag '" + bag.bag_id + "' has no regions");
  for (std::size_t k = 0; k < bag.regions.size(); ++k) {
    const data::Region& r = bag.regions[k];
    if (r.size() == 0) {
      throw DataError("bag '" + bag.bag_id + "' region '" + r.region_id + "' is empty");
    }
    if (spec.fusion != Fusion::kClinical && r.dim() != spec.feature_dim) {
      throw DataError("bag '" + bag.bag_id + "' has " + std::to_string(r.dim()) +
                      "-dimensional instances, model expects " +
                      std::to_string(spec.feature_dim));
    }
    inputs.insert_or_assign(region_name(tag, k), r.instances);
  }
  if (spec.fusion != Fusion::kImage) {
    if (bag.clinical.empty()) {
      throw ConfigError("fusion=" + std::string(fusion_name(spec.fusion)) + " but bag '" +
                        bag.bag_id + "' has an empty clinical vector");
    }
    if (bag.clinical.size() != spec.clinical_dim) {
      throw DataError("bag '" + bag.bag_id + "' clinical width " +
                      std::to_string(bag.clinical.size()) + " does not match classifier input " +
                      std::to_string(spec.clinical_dim));
    }
    inputs.insert_or_assign(tag + ".c", ad::Tensor({1, bag.clinical.size()}, bag.clinical));
  }
}

BagPrediction predict(const MilModel& model, const data::NestedBag& bag,
                      const ad::Dropout& psi_dropout) {
  ad::Tape tape;
  ad::ParamBinder params(tape, false);
  const BagVars vars = bag_on_tape(params, model, "x", bag.regions.size(), psi_dropout);
  const bool vote = model.spec.aggregator == Aggregator::kVote;
  tape.set_output(vote ? vars.instance_probs : vars.prob);
  ad::TensorMap inputs = model.params;
  bind_bag(inputs, model, "x", bag);
  const ad::Tensor& y = tape.forward(inputs);

  BagPrediction p;
  if (vote) {
    p.instance_probs = y.storage();
    p.score = majority_vote(p.instance_probs);
  } else {
    p.score = y[0];
  }
  for (ad::Var a : vars.region_attention) p.region_attention.push_back(tape.value(a).storage());
  if (vars.has_bag_attention) p.bag_attention = tape.value(vars.bag_attention).storage();
  return p;
}

nlohmann::json to_json(const MilModel& model) {
  const ModelSpec& s = model.spec;
  return {{"aggregator", std::string(aggregator_name(s.aggregator))},
          {"fusion", std::string(fusion_name(s.fusion))},
          {"feature_dim", s.feature_dim},
          {"clinical_dim", s.clinical_dim},
          {"psi_hidden", s.psi_hidden},
          {"n_att", s.n_att},
          {"head_hidden", s.head_hidden},
          {"seed", model.seed},
          {"params", ad::params_to_json(model.params)}};
}

MilModel model_from_json(const nlohmann::json& j) {
  ModelSpec s;
  std::uint64_t seed = 0;
  ad::TensorMap params;
  try {
    s.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
    s.fusion = parse_fusion(j.at("fusion").get<std::string>());
    s.feature_dim = j.at("feature_dim").get<std::size_t>();
    s.clinical_dim = j.at("clinical_dim").get<std::size_t>();
    s.psi_hidden = j.at("psi_hidden").get<std::vector<std::size_t>>();
    s.n_att = j.at("n_att").get<std::size_t>();
    s.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
    seed = j.at("seed").get<std::uint64_t>();
    params = ad::params_from_json(j.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  MilModel m = init_model(s, seed);
  for (auto& [name, t] : m.params) {
    const auto it = params.find(name);
    if (it == params.end() || it->second.shape() != t.shape()) {
      throw DataError("model parameter '" + name + "' is missing or has the wrong shape");
    }
    t = it->second;
  }
  return m;
}

}  // namespace nmil::mil
