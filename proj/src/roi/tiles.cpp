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

#include "nmil/roi/tiles.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "nmil/common/error.hpp"

namespace nmil::roi {
namespace {

struct Level {
  double magnification;
  std::size_t size;
};

std::vector<Level> levels_of(ScalePlan plan) {
  switch (plan) {
    case ScalePlan::kMono10x: return {{10.0, 256}};
    case ScalePlan::kMono20x: return {{20.0, 512}};
    case ScalePlan::kTri: return {{2.5, 128}, {10.0, 128}, {40.0, 128}};
  }
  return {};
}

// The level whose grid drives tile acceptance.
Level working_level(ScalePlan plan) {
  return plan == ScalePlan::kMono20x ? Level{20.0, 512}
                                     : Level{10.0, plan == ScalePlan::kTri ? 128u : 256u};
}

// Converts mask pixels to level pixels; exact for the supported ratios.
double to_level(double mask_px, double level_mag, double mask_mag) {
  return mask_px * level_mag / mask_mag;
}

}  // namespace

std::string_view plan_name(ScalePlan plan) {
  switch (plan) {
    case ScalePlan::kMono10x: return "mono10x";
    case ScalePlan::kMono20x: return "mono20x";
    case ScalePlan::kTri: return "tri";
  }
  return "?";
}

ScalePlan parse_plan(std::string_view name) {
  for (ScalePlan p : {ScalePlan::kMono10x, ScalePlan::kMono20x, ScalePlan::kTri}) {
    if (name == plan_name(p)) return p;
  }
  throw ConfigError("unknown scale plan '" + std::string(name) +
                    "' (expected mono10x, mono20x or tri)");
}

std::size_t footprint_px(std::size_t size, double level_mag, double mask_mag) {
  const double f = static_cast<double>(size) * mask_mag / level_mag;
  if (!(f >= 1.0) || f != std::floor(f)) {
    throw DataError(fmt::format("a {}-px tile at {}x spans {} pixels of the {}x mask",
                                size, level_mag, f, mask_mag));
  }
  return static_cast<std::size_t>(f);
}

TileManifest extract_tiles(const RoiMask& roi, ScalePlan plan, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("coverage threshold must lie in [0, 1]");
  }
  if (roi.inside.size() != roi.width * roi.height || roi.width == 0) {
    throw DataError("ROI raster is malformed");
  }
  const double mask_mag = roi.magnification;
  const Level work = working_level(plan);
  const std::size_t cell = footprint_px(work.size, work.magnification, mask_mag);
  if (cell > roi.width || cell > roi.height) {
    throw DataError(fmt::format("{}-px tiles at {}x need {} mask pixels but the ROI is {}x{}",
                                work.size, work.magnification, cell, roi.width, roi.height));
  }

  // Row prefix sums give each cell's ROI count.
  std::vector<std::size_t> integral((roi.width + 1) * (roi.height + 1), 0);
  const std::size_t stride = roi.width + 1;
  for (std::size_t y = 0; y < roi.height; ++y) {
    std::size_t row = 0;
    for (std::size_t x = 0; x < roi.width; ++x) {
      row += roi.at(x, y) ? 1 : 0;
      integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row;
    }
  }
  auto roi_count = [&](std::size_t x0, std::size_t y0, std::size_t side) {
    const std::size_t x1 = x0 + side, y1 = y0 + side;
    return integral[y1 * stride + x1] - integral[y0 * stride + x1] -
           integral[y1 * stride + x0] + integral[y0 * stride + x0];
  };

  TileManifest manifest;
  manifest.plan = plan;
  const double area = static_cast<double>(cell) * static_cast<double>(cell);
  const std::vector<Level> levels = levels_of(plan);
  for (std::size_t y0 = 0; y0 + cell <= roi.height; y0 += cell) {
    for (std::size_t x0 = 0; x0 + cell <= roi.width; x0 += cell) {
      const double coverage = static_cast<double>(roi_count(x0, y0, cell)) / area;
      if (coverage < threshold) continue;
      if (plan != ScalePlan::kTri) {
        manifest.entries.push_back(
            {magnification_tag(work.magnification),
             std::llround(to_level(static_cast<double>(x0), work.magnification, mask_mag)),
             std::llround(to_level(static_cast<double>(y0), work.magnification, mask_mag)),
             work.size, coverage});
        continue;
      }
      const double cx = static_cast<double>(x0) + static_cast<double>(cell) / 2.0;
      const double cy = static_cast<double>(y0) + static_cast<double>(cell) / 2.0;
      std::vector<TileEntry> group;
      for (const Level& l : levels) {
        const double half = static_cast<double>(l.size) / 2.0;
        const double lx = to_level(cx, l.magnification, mask_mag) - half;
        const double ly = to_level(cy, l.magnification, mask_mag) - half;
        const double lw = to_level(static_cast<double>(roi.width), l.magnification, mask_mag);
        const double lh = to_level(static_cast<double>(roi.height), l.magnification, mask_mag);
        if (lx < 0.0 || ly < 0.0 || lx + 2.0 * half > lw || ly + 2.0 * half > lh) break;
        group.push_back({magnification_tag(l.magnification), std::llround(lx),
                         std::llround(ly), l.size, coverage});
      }
      if (group.size() == levels.size()) {
        manifest.entries.insert(manifest.entries.end(), group.begin(), group.end());
      }
    }
  }
  return manifest;
}

std::string manifest_csv(const TileManifest& manifest) {
  std::ostringstream os;
  os << "level,x,y,size,coverage\n";
  for (const TileEntry& e : manifest.entries) {
    os << fmt::format("{},{},{},{},{:.6f}\n", e.level, e.x, e.y, e.size, e.coverage);
  }
  return os.str();
}

}  // namespace nmil::roi
