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

#include "nmil/roi/mask.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "nmil/common/error.hpp"

namespace nmil::roi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of f over n samples with the given stride.
void envelope_pass(std::vector<double>& f, std::size_t offset, std::size_t stride,
                   std::size_t n, std::vector<std::size_t>& v, std::vector<double>& z,
                   std::vector<double>& out) {
  std::size_t k = 0;
  bool any = false;
  const auto value = [&](std::size_t q) { return f[offset + q * stride]; };
  for (std::size_t q = 0; q < n; ++q) {
    if (value(q) == kInf) continue;
    const double fq = value(q) + static_cast<double>(q) * static_cast<double>(q);
    if (!any) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      k = 0;
      any = true;
      continue;
    }
    double s = 0.0;
    while (true) {
      const double p = static_cast<double>(v[k]);
      s = (fq - (value(v[k]) + p * p)) / (2.0 * (static_cast<double>(q) - p));
      if (s > z[k] || k == 0) break;
      --k;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates the first one everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (!any) return;
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double d = static_cast<double>(q) - static_cast<double>(v[k]);
    out[q] = d * d + value(v[k]);
  }
  for (std::size_t q = 0; q < n; ++q) f[offset + q * stride] = out[q];
}

std::vector<std::uint8_t> select(const SegMask& m, Tissue t) {
  std::vector<std::uint8_t> out(m.labels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = m.labels[i] == static_cast<std::uint8_t>(t) ? 1 : 0;
  }
  return out;
}

}  // namespace

double parse_magnification(std::string_view tag) {
  if (tag == "2.5x") return 2.5;
  if (tag == "10x") return 10.0;
  if (tag == "20x") return 20.0;
  if (tag == "40x") return 40.0;
  throw DataError("unknown magnification '" + std::string(tag) +
                  "' (expected 2.5x, 10x, 20x or 40x)");
}

std::string magnification_tag(double magnification) {
  if (magnification == 2.5) return "2.5x";
  if (magnification == 10.0) return "10x";
  if (magnification == 20.0) return "20x";
  if (magnification == 40.0) return "40x";
  throw DataError("unsupported magnification " + std::to_string(magnification));
}

void SegMask::validate() const {
  if (width == 0 || height == 0) throw DataError("segmentation mask has an empty extent");
  if (labels.size() != width * height) {
    throw DataError("segmentation mask holds " + std::to_string(labels.size()) +
                    " labels for a " + std::to_string(width) + "x" +
                    std::to_string(height) + " raster");
  }
  if (!(mpp > 0.0) || !std::isfinite(mpp)) throw DataError("mask mpp must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > kMaxTissueLabel) {
      throw DataError("mask pixel (" + std::to_string(i % width) + ", " +
                      std::to_string(i / width) + ") has label " +
                      std::to_string(labels[i]) + " outside 0..5");
    }
  }
  magnification_tag(magnification);
}

std::string_view roi_name(RoiKind kind) {
  switch (kind) {
    case RoiKind::kUro: return "uro";
    case RoiKind::kLp: return "lp";
    case RoiKind::kUroLp: return "urolp";
    case RoiKind::kBorder: return "border";
    case RoiKind::kFront: return "front";
  }
  return "?";
}

RoiKind parse_roi(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (RoiKind k : {RoiKind::kUro, RoiKind::kLp, RoiKind::kUroLp, RoiKind::kBorder,
                    RoiKind::kFront}) {
    if (n == roi_name(k)) return k;
  }
  throw ConfigError("unknown ROI kind '" + std::string(name) +
                    "' (expected uro, lp, urolp, border or front)");
}

std::size_t RoiMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
}

std::size_t microns_to_px(double microns, double mpp) {
  if (!(mpp > 0.0) || !std::isfinite(mpp)) throw ConfigError("mpp must be positive");
  if (!(microns >= 0.0) || !std::isfinite(microns)) {
    throw ConfigError("distance budget must be finite and >= 0");
  }
  return static_cast<std::size_t>(std::llround(microns / mpp));
}

std::vector<double> squared_distance(const std::vector<std::uint8_t>& set,
                                     std::size_t width, std::size_t height) {
  std::vector<double> f(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) f[i] = set[i] ? 0.0 : kInf;
  const std::size_t n = std::max(width, height);
  std::vector<std::size_t> v(n);
  std::vector<double> z(n + 1), out(n);
  for (std::size_t x = 0; x < width; ++x) envelope_pass(f, x, width, height, v, z, out);
  for (std::size_t y = 0; y < height; ++y) envelope_pass(f, y * width, 1, width, v, z, out);
  return f;
}

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& set,
                                 std::size_t width, std::size_t height,
                                 std::size_t radius) {
  const std::vector<double> d = squared_distance(set, width, height);
  const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
  std::vector<std::uint8_t> out(set.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i] <= r2 ? 1 : 0;
  return out;
}

std::vector<std::uint32_t> label_components(const std::vector<std::uint8_t>& set,
                                            std::size_t width, std::size_t height) {
  std::vector<std::uint32_t> ids(set.size(), 0);
  std::uint32_t next = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < set.size(); ++start) {
    if (!set[start] || ids[start]) continue;
    ids[start] = ++next;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      const std::size_t px = p % width, py = p / width;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const auto nx = static_cast<std::ptrdiff_t>(px) + dx;
          const auto ny = static_cast<std::ptrdiff_t>(py) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(width) ||
              ny >= static_cast<std::ptrdiff_t>(height)) {
            continue;
          }
          const std::size_t q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
          if (set[q] && !ids[q]) {
            ids[q] = next;
            queue.push_back(q);
          }
        }
      }
    }
  }
  return ids;
}

RoiMask derive_roi(const SegMask& mask, RoiKind kind, const DistanceBudget& budget) {
  mask.validate();
  const std::size_t w = mask.width, h = mask.height;
  RoiMask out;
  out.width = w;
  out.height = h;
  out.kind = kind;
  out.mpp = mask.mpp;
  out.magnification = mask.magnification;

  const std::vector<std::uint8_t> uro = select(mask, Tissue::kUrothelium);
  const std::vector<std::uint8_t> lp = select(mask, Tissue::kLaminaPropria);
  if (kind == RoiKind::kUro) {
    out.inside = uro;
    return out;
  }
  if (kind == RoiKind::kLp) {
    out.inside = lp;
    return out;
  }
  std::vector<std::uint8_t> urolp(uro.size());
  for (std::size_t i = 0; i < urolp.size(); ++i) urolp[i] = uro[i] | lp[i];
  if (kind == RoiKind::kUroLp) {
    out.inside = std::move(urolp);
    return out;
  }

  const std::size_t r = microns_to_px(budget.microns, mask.mpp);
  const std::vector<std::uint8_t> du = dilate(uro, w, h, r);
  const std::vector<std::uint8_t> dl = dilate(lp, w, h, r);
  std::vector<std::uint8_t> border(urolp.size());
  for (std::size_t i = 0; i < border.size(); ++i) border[i] = du[i] & dl[i] & urolp[i];
  if (kind == RoiKind::kBorder) {
    out.inside = std::move(border);
    return out;
  }

  const std::vector<std::uint8_t> muscle = select(mask, Tissue::kMuscle);
  std::vector<std::uint8_t> tissue(mask.labels.size());
  for (std::size_t i = 0; i < tissue.size(); ++i) tissue[i] = mask.labels[i] != 0 ? 1 : 0;
  const std::vector<std::uint32_t> comp = label_components(tissue, w, h);
  std::vector<std::uint8_t> has_muscle(1, 0);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] >= has_muscle.size()) has_muscle.resize(comp[i] + 1, 0);
    if (muscle[i]) has_muscle[comp[i]] = 1;
  }
  const std::vector<double> dm = squared_distance(muscle, w, h);
  const double r2 = static_cast<double>(r) * static_cast<double>(r);
  out.inside.assign(border.size(), 0);
  for (std::size_t i = 0; i < border.size(); ++i) {
    out.inside[i] = border[i] && has_muscle[comp[i]] && dm[i] <= r2 ? 1 : 0;
  }
  return out;
}

}  // namespace nmil::roi
