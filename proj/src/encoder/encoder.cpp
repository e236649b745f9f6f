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

#include "nmil/encoder/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "nmil/autodiff/kernels.hpp"
#include "nmil/autodiff/serialize.hpp"
#include "nmil/common/error.hpp"
#include "nmil/common/parallel.hpp"
#include "nmil/common/rng.hpp"

namespace nmil::enc {
namespace {

constexpr std::uint64_t kInitStream = 7;

void check_dim(const EncoderStack& stack, std::size_t m) {
  if (m != stack.input_dim()) {
    throw DataError("encoder expects " + std::to_string(stack.input_dim()) +
                    "-dimensional instances, got " + std::to_string(m));
  }
}

nlohmann::json layout_json(const ad::MlpLayout& l) {
  return {{"prefix", l.prefix}, {"widths", l.widths}};
}

ad::MlpLayout layout_from(const nlohmann::json& j, ad::Activation hidden,
                          ad::Activation output) {
  ad::MlpLayout l;
  l.prefix = j.at("prefix").get<std::string>();
  l.widths = j.at("widths").get<std::vector<std::size_t>>();
  l.hidden = hidden;
  l.output = output;
  if (l.widths.size() < 2) throw DataError("layer widths must chain at least two sizes");
  return l;
}

}  // namespace

std::string_view mode_name(PretrainMode mode) {
  switch (mode) {
    case PretrainMode::kI: return "I";
    case PretrainMode::kC: return "C";
    case PretrainMode::kSC: return "SC";
    case PretrainMode::kCE: return "CE";
    case PretrainMode::kMulti: return "MULTI";
  }
  return "?";
}

PretrainMode parse_mode(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (PretrainMode m : {PretrainMode::kI, PretrainMode::kC, PretrainMode::kSC,
                         PretrainMode::kCE, PretrainMode::kMulti}) {
    if (up == mode_name(m)) return m;
  }
  throw ConfigError("unknown pretraining mode '" + std::string(name) +
                    "' (expected I, C, SC, CE or MULTI)");
}

bool needs_labels(PretrainMode mode) noexcept {
  return mode == PretrainMode::kSC || mode == PretrainMode::kCE ||
         mode == PretrainMode::kMulti;
}

EncoderStack init_encoder(const EncoderShape& shape, std::uint64_t seed) {
  if (shape.input_dim == 0 || shape.feature_dim == 0 || shape.proj_dim == 0 ||
      shape.classes < 2) {
    throw ConfigError("encoder widths must be positive with at least two classes");
  }
  EncoderStack s;
  s.seed = seed;
  s.g.prefix = "G";
  s.g.widths.push_back(shape.input_dim);
  s.g.widths.insert(s.g.widths.end(), shape.hidden.begin(), shape.hidden.end());
  s.g.widths.push_back(shape.feature_dim);
  s.g.hidden = ad::Activation::kTanh;
  s.g.output = ad::Activation::kTanh;
  s.f.prefix = "F";
  s.f.widths = {shape.feature_dim, shape.feature_dim, shape.proj_dim};
  s.c.prefix = "C";
  s.c.widths = {shape.feature_dim, shape.classes};
  Rng rng = make_rng(seed, kInitStream);
  ad::init_mlp(s.g, rng, s.params);
  ad::init_mlp(s.f, rng, s.params);
  ad::init_mlp(s.c, rng, s.params);
  return s;
}

ad::Tensor embed(const EncoderStack& stack, const ad::Tensor& x) {
  check_dim(stack, x.cols());
  return ad::mlp_apply(stack.g, stack.params, x);
}

std::vector<double> embed(const EncoderStack& stack, const data::InstanceVec& x) {
  check_dim(stack, x.values.size());
  const ad::Tensor h = embed(stack, ad::Tensor({1, x.values.size()}, x.values));
  return h.storage();
}

ad::Tensor project(const EncoderStack& stack, const ad::Tensor& x) {
  const ad::Tensor h = embed(stack, x);
  return ad::kernels::l2_normalize(ad::mlp_apply(stack.f, stack.params, h),
                                   ad::Axis::k1);
}

data::Dataset embed_dataset(const EncoderStack& stack, const data::Dataset& ds,
                            std::size_t jobs) {
  if (ds.dim != stack.input_dim()) check_dim(stack, ds.dim);
  data::Dataset out = ds;
  out.dim = stack.feature_dim();
  std::vector<data::NestedBag*> bags;
  for (auto* split : {&out.train, &out.val, &out.test}) {
    for (data::NestedBag& b : *split) bags.push_back(&b);
  }
  parallel_for(bags.size(), jobs, [&](std::size_t i) {
    for (data::Region& r : bags[i]->regions) r.instances = embed(stack, r.instances);
  });
  return out;
}

nlohmann::json to_json(const EncoderStack& stack) {
  return {{"mode", std::string(mode_name(stack.mode))},
          {"seed", stack.seed},
          {"G", layout_json(stack.g)},
          {"F", layout_json(stack.f)},
          {"C", layout_json(stack.c)},
          {"params", ad::params_to_json(stack.params)}};
}

EncoderStack encoder_from_json(const nlohmann::json& j) {
  EncoderStack s;
  try {
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.g = layout_from(j.at("G"), ad::Activation::kTanh, ad::Activation::kTanh);
    s.f = layout_from(j.at("F"), ad::Activation::kTanh, ad::Activation::kIdentity);
    s.c = layout_from(j.at("C"), ad::Activation::kTanh, ad::Activation::kIdentity);
    s.params = ad::params_from_json(j.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed encoder file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed encoder file: ") + e.what());
  }
  if (s.g.out() != s.f.in() || s.g.out() != s.c.in()) {
    throw DataError("encoder layer widths do not chain");
  }
  for (const ad::MlpLayout* l : {&s.g, &s.f, &s.c}) {
    for (std::size_t k = 0; k < l->layers(); ++k) {
      const auto w = s.params.find(l->weight(k));
      const auto b = s.params.find(l->bias(k));
      if (w == s.params.end() || b == s.params.end() ||
          w->second.shape() != ad::Tensor::Shape{l->widths[k + 1], l->widths[k]} ||
          b->second.shape() != ad::Tensor::Shape{1, l->widths[k + 1]}) {
        throw DataError("encoder parameter '" + l->weight(k) +
                        "' is missing or has the wrong shape");
      }
    }
  }
  return s;
}

void VectorAugmenter::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("augmentation noise must be finite and >= 0");
  }
  if (!(coord_dropout >= 0.0 && coord_dropout < 1.0)) {
    throw ConfigError("coordinate dropout must lie in [0, 1)");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max) || !std::isfinite(scale_max)) {
    throw ConfigError("scale jitter needs 0 < min <= max");
  }
}

std::vector<double> augment_view(std::span<const double> x,
                                 const VectorAugmenter& aug, std::uint64_t item,
                                 std::uint64_t view) {
  std::vector<double> out(x.begin(), x.end());
  if (aug.is_identity()) return out;
  if (!aug.feature_std.empty() && aug.feature_std.size() != x.size()) {
    throw DataError("augmenter feature std has the wrong dimension");
  }
  Rng rng = make_rng(derive_seed(aug.seed, item), view);
  const double scale =
      aug.scale_min + (aug.scale_max - aug.scale_min) * uniform01(rng);
  const double keep = 1.0 / (1.0 - aug.coord_dropout);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double sd = aug.feature_std.empty() ? 1.0 : aug.feature_std[j];
    double v = out[j] * scale;
    if (aug.noise_sigma > 0.0) v += aug.noise_sigma * sd * noise(rng);
    if (aug.coord_dropout > 0.0) v = uniform01(rng) < aug.coord_dropout ? 0.0 : v * keep;
    out[j] = v;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> augment_pair(
    std::span<const double> x, const VectorAugmenter& aug, std::uint64_t item) {
  return {augment_view(x, aug, item, 0), augment_view(x, aug, item, 1)};
}

}  // namespace nmil::enc
