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

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nmil/data/bag.hpp"

namespace nmil::data {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

// The three class-1 distributions paired against class 0 = N(3, 2.5):
// minor, partial and significant overlap.
inline constexpr Gaussian kClass0{3.0, 2.5};
inline constexpr std::array<Gaussian, 3> kClass1Options{
    Gaussian{-3.0, 1.0}, Gaussian{0.0, 2.0}, Gaussian{2.0, 1.5}};

// MIL-1+ (any positive instance) or MIL-t+ (positive fraction above t).
struct LabelRule {
  enum class Kind { kStandard, kThreshold };
  Kind kind = Kind::kStandard;
  double threshold = 0.5;

  static LabelRule standard() { return {Kind::kStandard, 0.0}; }
  static LabelRule at_least_fraction(double t) { return {Kind::kThreshold, t}; }
};

int label_bag(const std::vector<bool>& flags, const LabelRule& rule);

struct SynthSpec {
  Gaussian class0 = kClass0;
  Gaussian class1 = kClass1Options[0];
  std::size_t n_bags = 150;
  std::array<std::size_t, 3> split{90, 30, 30};
  std::size_t min_bag_size = 3000;
  std::size_t max_bag_size = 7000;
  double positive_bag_fraction = 0.5;
  // Positive bags draw their class-1 fraction from U[lo, hi).
  double min_positive_fraction = 0.0;
  double max_positive_fraction = 0.5;
  LabelRule label_rule = LabelRule::standard();
  // When set, each bag is cut into K ~ U{min_regions..max_regions}
  // contiguous regions; otherwise every bag is a single region.
  bool region_chunks = false;
  std::size_t min_regions = 2;
  std::size_t max_regions = 6;
  std::uint64_t seed = 0;

  // Throws ConfigError on inconsistent or degenerate settings.
  void validate() const;
};

// Deterministic in spec.seed. Instances are scalars (M = 1); per-instance
// class labels are kept in each region.
Dataset gen_synth_bags(const SynthSpec& spec);

// Largest-remainder apportionment of `total` items over `weights`.
std::vector<std::size_t> apportion(std::size_t total,
                                   const std::vector<std::size_t>& weights);

inline constexpr std::size_t kWholeBag = std::numeric_limits<std::size_t>::max();

// Keeps min(n_b, L) instances of each region, chosen uniformly without
// replacement and returned in their original order. Deterministic in
// (seed, epoch, bag_id).
NestedBag subsample_bag(const NestedBag& bag, std::size_t n_b,
                        std::uint64_t seed, std::uint64_t epoch);

}  // namespace nmil::data
