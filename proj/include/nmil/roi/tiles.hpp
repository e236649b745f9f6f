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
#include <string>
#include <string_view>
#include <vector>

#include "nmil/roi/mask.hpp"

namespace nmil::roi {

// mono10x: 256-px tiles at 10x. mono20x: 512-px tiles at 20x. tri: 128-px
// tiles at 2.5x, 10x and 40x sharing one center on the 10x grid.
enum class ScalePlan { kMono10x, kMono20x, kTri };
std::string_view plan_name(ScalePlan plan);
ScalePlan parse_plan(std::string_view name);  // mono10x|mono20x|tri

struct TileEntry {
  std::string level;  // magnification tag
  long long x = 0;    // top-left, in pixels of `level`
  long long y = 0;
  std::size_t size = 0;
  double coverage = 0.0;  // ROI fraction of the tile footprint

  bool operator==(const TileEntry&) const = default;
};

struct TileManifest {
  ScalePlan plan = ScalePlan::kMono10x;
  std::vector<TileEntry> entries;
};

inline constexpr double kDefaultCoverage = 0.7;

// Side of a `size`-px tile at `level_mag`, measured in pixels of a raster at
// `mask_mag`. Throws DataError unless it is a whole number of pixels.
std::size_t footprint_px(std::size_t size, double level_mag, double mask_mag);

// Non-overlapping grid over the ROI raster in row-major order; a grid cell
// is kept when its ROI fraction is >= threshold. Tri-scale cells are kept
// only when all three co-centered tiles lie inside the level extents.
// Throws DataError when the working tile does not fit in the raster.
TileManifest extract_tiles(const RoiMask& roi, ScalePlan plan,
                           double threshold = kDefaultCoverage);

// "level,x,y,size,coverage" with a header row.
std::string manifest_csv(const TileManifest& manifest);

}  // namespace nmil::roi
