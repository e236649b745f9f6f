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

#include "nmil/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nmil/common/error.hpp"
#include "nmil/common/rng.hpp"

namespace nmil::data {
namespace {

constexpr std::uint64_t kOrderStream = 1;
constexpr std::uint64_t kBagStreamBase = 1000;

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Number of class-1 instances for a positive bag of size L.
std::size_t positive_count(const SynthSpec& spec, std::size_t size, Rng& rng) {
  const double span = spec.max_positive_fraction - spec.min_positive_fraction;
  const double rho = spec.min_positive_fraction + span * uniform01(rng);
  auto count = static_cast<std::size_t>(std::floor(rho * static_cast<double>(size)));
  if (spec.label_rule.kind == LabelRule::Kind::kStandard) {
    count = std::max<std::size_t>(count, 1);
  } else {
    const auto floor_t = static_cast<std::size_t>(
        std::floor(spec.label_rule.threshold * static_cast<double>(size)));
    count = std::max(count, floor_t + 1);
  }
  return std::min(count, size);
}

NestedBag make_bag(const SynthSpec& spec, std::size_t index, int label) {
  Rng rng = make_rng(spec.seed, kBagStreamBase + index);
  const std::size_t size = uniform_size(rng, spec.min_bag_size, spec.max_bag_size);
  const std::size_t positives = label == 1 ? positive_count(spec, size, rng) : 0;

  std::vector<bool> flags(size, false);
  std::fill(flags.begin(), flags.begin() + static_cast<std::ptrdiff_t>(positives), true);
  std::shuffle(flags.begin(), flags.end(), rng);

  std::normal_distribution<double> draw0(spec.class0.mean, spec.class0.stddev);
  std::normal_distribution<double> draw1(spec.class1.mean, spec.class1.stddev);
  std::vector<double> values(size);
  for (std::size_t i = 0; i < size; ++i) values[i] = flags[i] ? draw1(rng) : draw0(rng);

  const int derived = label_bag(flags, spec.label_rule);
  if (derived != label) {
    throw std::logic_error("synthetic bag label disagrees with its label rule");
  }

  std::size_t regions = 1;
  if (spec.region_chunks) {
    regions = std::min(size, uniform_size(rng, spec.min_regions, spec.max_regions));
  }

  NestedBag bag;
  bag.bag_id = padded("bag", index, 3);
  bag.label = label;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < regions; ++k) {
    const std::size_t end = size * (k + 1) / regions;
    Region r;
    r.region_id = padded("r", k, 1);
    const std::size_t n = end - begin;
    r.instances = ad::Tensor({n, 1}, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(begin),
                                                         values.begin() + static_cast<std::ptrdiff_t>(end)));
    r.instance_ids.reserve(n);
    r.instance_labels.reserve(n);
    for (std::size_t i = begin; i < end; ++i) {
      r.instance_ids.push_back(padded("i", i, 4));
      r.instance_labels.push_back(flags[i] ? 1 : 0);
    }
    bag.regions.push_back(std::move(r));
    begin = end;
  }
  return bag;
}

}  // namespace

int label_bag(const std::vector<bool>& flags, const LabelRule& rule) {
  if (flags.empty()) throw DataError("label_bag on an empty flag vector");
  const auto positives =
      static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  if (rule.kind == LabelRule::Kind::kStandard) return positives > 0 ? 1 : 0;
  if (!(rule.threshold >= 0.0 && rule.threshold < 1.0)) {
    throw ConfigError("threshold label rule needs t in [0, 1), got " +
                      std::to_string(rule.threshold));
  }
  const double fraction =
      static_cast<double>(positives) / static_cast<double>(flags.size());
  return fraction > rule.threshold ? 1 : 0;
}

void SynthSpec::validate() const {
  if (n_bags == 0) throw ConfigError("synthetic spec needs at least one bag");
  if (split[0] + split[1] + split[2] != n_bags) {
    throw ConfigError("split sizes must sum to n_bags");
  }
  if (min_bag_size == 0 || min_bag_size > max_bag_size) {
    throw ConfigError("bag size range must satisfy 1 <= min <= max");
  }
  if (!(positive_bag_fraction > 0.0 && positive_bag_fraction <= 1.0)) {
    throw ConfigError("positive bag fraction must lie in (0, 1]");
  }
  if (!(min_positive_fraction >= 0.0 && max_positive_fraction <= 1.0 &&
        min_positive_fraction <= max_positive_fraction)) {
    throw ConfigError("positive instance fraction range must satisfy 0 <= lo <= hi <= 1");
  }
  if (!(class0.stddev > 0.0 && class1.stddev > 0.0)) {
    throw ConfigError("class standard deviations must be positive");
  }
  if (label_rule.kind == LabelRule::Kind::kStandard) {
    if (max_positive_fraction <= 0.0) {
      throw ConfigError("standard MIL labels with hi = 0 cannot produce positive bags");
    }
  } else {
    if (!(label_rule.threshold >= 0.0 && label_rule.threshold < 1.0)) {
      throw ConfigError("threshold label rule needs t in [0, 1)");
    }
    if (max_positive_fraction <= label_rule.threshold) {
      throw ConfigError("threshold labels need hi > t to produce positive bags");
    }
  }
  if (region_chunks && (min_regions == 0 || min_regions > max_regions)) {
    throw ConfigError("region count range must satisfy 1 <= min <= max");
  }
}

std::vector<std::size_t> apportion(std::size_t total,
                                   const std::vector<std::size_t>& weights) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size(), 0);
  if (sum == 0) return out;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (rem, index)
  std::size_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::size_t scaled = total * weights[i];
    out[i] = scaled / sum;
    given += out[i];
    remainders.emplace_back(scaled % sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; given < total; ++k, ++given) ++out[remainders[k].second];
  return out;
}

Dataset gen_synth_bags(const SynthSpec& spec) {
  spec.validate();
  const auto total_pos = static_cast<std::size_t>(
      std::lround(spec.positive_bag_fraction * static_cast<double>(spec.n_bags)));
  const std::vector<std::size_t> split_sizes(spec.split.begin(), spec.split.end());
  const std::vector<std::size_t> pos_per_split = apportion(total_pos, split_sizes);

  Rng order_rng = make_rng(spec.seed, kOrderStream);
  Dataset ds;
  ds.dim = 1;
  ds.provenance = SyntheticOrigin{spec.seed, "gaussian bags"};
  std::vector<NestedBag>* splits[3] = {&ds.train, &ds.val, &ds.test};
  std::size_t index = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<int> labels(split_sizes[s], 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(pos_per_split[s], labels.size())), 1);
    std::shuffle(labels.begin(), labels.end(), order_rng);
    for (int label : labels) splits[s]->push_back(make_bag(spec, index++, label));
  }
  return ds;
}

NestedBag subsample_bag(const NestedBag& bag, std::size_t n_b,
                        std::uint64_t seed, std::uint64_t epoch) {
  if (n_b == 0) throw ConfigError("bag sampling size n_b must be >= 1");
  NestedBag out;
  out.bag_id = bag.bag_id;
  out.label = bag.label;
  out.clinical = bag.clinical;
  Rng rng = make_rng(derive_seed(seed, epoch), stable_hash(bag.bag_id));
  for (const Region& r : bag.regions) {
    const std::size_t size = r.size();
    if (n_b >= size) {
      out.regions.push_back(r);
      continue;
    }
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n_b; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, size - 1)(rng);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n_b);
    std::sort(idx.begin(), idx.end());

    Region s;
    s.region_id = r.region_id;
    const std::size_t m = r.dim();
    s.instances = ad::Tensor({n_b, m});
    const bool labelled = r.instance_labels.size() == size;
    for (std::size_t k = 0; k < n_b; ++k) {
      const auto src = r.instances.row(idx[k]);
      std::copy(src.begin(), src.end(), s.instances.row(k).begin());
      s.instance_ids.push_back(r.instance_ids[idx[k]]);
      if (labelled) s.instance_labels.push_back(r.instance_labels[idx[k]]);
    }
    out.regions.push_back(std::move(s));
  }
  return out;
}

}  // namespace nmil::data
