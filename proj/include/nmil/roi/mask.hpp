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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nmil::roi {

// Tissue classes produced by the upstream segmentation model.
enum class Tissue : std::uint8_t {
  kBackground = 0,
  kUrothelium = 1,
  kLaminaPropria = 2,
  kMuscle = 3,
  kBlood = 4,
  kDamage = 5,
};
inline constexpr std::uint8_t kMaxTissueLabel = 5;

// Parses "2.5x", "10x", "20x" or "40x". Throws DataError otherwise.
double parse_magnification(std::string_view tag);
std::string magnification_tag(double magnification);

struct SegMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> labels;  // row-major
  double mpp = 0.0;
  double magnification = 10.0;

  std::uint8_t at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  // Throws DataError on extents, label range or mpp violations.
  void validate() const;
};

enum class RoiKind { kUro, kLp, kUroLp, kBorder, kFront };
std::string_view roi_name(RoiKind kind);
RoiKind parse_roi(std::string_view name);  // uro|lp|urolp|border|front

struct RoiMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> inside;  // 0 or 1, row-major
  RoiKind kind = RoiKind::kUro;
  double mpp = 0.0;
  double magnification = 10.0;

  bool at(std::size_t x, std::size_t y) const { return inside[y * width + x] != 0; }
  std::size_t count() const noexcept;
};

struct DistanceBudget {
  double microns = 800.0;
};

// round(microns / mpp). Throws ConfigError unless mpp > 0 and microns >= 0.
std::size_t microns_to_px(double microns, double mpp);

// Exact squared Euclidean distance from every pixel to the nearest pixel of
// `set` (nonzero entries), or +inf when the set is empty. Separable lower
// envelope of parabolas, one pass per axis.
std::vector<double> squared_distance(const std::vector<std::uint8_t>& set,
                                     std::size_t width, std::size_t height);

// {p : exists q in set with |p - q| <= radius}.
std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& set,
                                 std::size_t width, std::size_t height,
                                 std::size_t radius);

// 8-connected component ids of nonzero pixels (0 for background, ids from 1
// in row-major order of first appearance).
std::vector<std::uint32_t> label_components(const std::vector<std::uint8_t>& set,
                                            std::size_t width, std::size_t height);

RoiMask derive_roi(const SegMask& mask, RoiKind kind, const DistanceBudget& budget = {});

}  // namespace nmil::roi
