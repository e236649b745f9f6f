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

#include "nmil/eval/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "nmil/common/error.hpp"
#include "nmil/common/rng.hpp"

namespace nmil::eval {

double mc_dropout_predict(const mil::MilModel& model, const data::NestedBag& bag,
                          std::size_t runs, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError(fmt::format("Monte-Carlo dropout rate must lie in [0, 1), got {}", rate));
  }
  if (runs == 0) throw ConfigError("Monte-Carlo dropout needs at least one run");
  if (rate == 0.0 || model.spec.aggregator == mil::Aggregator::kVote) {
    return mil::predict(model, bag).score;
  }
  Rng rng = make_rng(seed, stable_hash(bag.bag_id));
  double total = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    total += mil::predict(model, bag, ad::Dropout{rate, &rng, 1}).score;
  }
  return total / static_cast<double>(runs);
}

std::vector<double> mc_dropout_scores(const mil::MilModel& model,
                                      const std::vector<data::NestedBag>& bags,
                                      std::size_t runs, double rate, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(bags.size());
  for (const auto& b : bags) out.push_back(mc_dropout_predict(model, b, runs, rate, seed));
  return out;
}

AttentionExport export_attention(const mil::MilModel& model, const data::NestedBag& bag,
                                 const std::vector<TileCoord>* tiles,
                                 std::size_t downsample) {
  if (!mil::has_attention(model.spec.aggregator) || model.spec.fusion == mil::Fusion::kClinical) {
    throw ConfigError("attention export needs an abmil or nmia model with image input, got " +
                      std::string(mil::aggregator_name(model.spec.aggregator)));
  }
  if (downsample == 0) throw ConfigError("heatmap downsample must be >= 1");
  const mil::BagPrediction p = mil::predict(model, bag);
  const bool nested = model.spec.aggregator == mil::Aggregator::kNmia;

  AttentionExport out;
  std::size_t flat = 0;
  for (std::size_t k = 0; k < bag.regions.size(); ++k) {
    const data::Region& r = bag.regions[k];
    for (std::size_t i = 0; i < r.size(); ++i, ++flat) {
      AttentionRow row;
      row.region_id = r.region_id;
      row.instance_id = i < r.instance_ids.size() ? r.instance_ids[i] : std::to_string(i);
      row.instance_weight = nested ? p.region_attention[k][i] : p.region_attention[0][flat];
      row.region_weight = nested ? p.bag_attention[k] : 1.0;
      row.attention = row.instance_weight * row.region_weight;
      out.rows.push_back(std::move(row));
    }
  }

  if (tiles != nullptr) {
    if (tiles->size() != out.rows.size()) {
      throw DataError(fmt::format("bag '{}' has {} instances but {} tile coordinates",
                                  bag.bag_id, out.rows.size(), tiles->size()));
    }
    long long w = 0, h = 0;
    const auto ds = static_cast<long long>(downsample);
    for (const TileCoord& t : *tiles) {
      if (t.x < 0 || t.y < 0 || t.size == 0) throw DataError("tile coordinates must be nonnegative with size >= 1");
      w = std::max(w, (t.x + static_cast<long long>(t.size) + ds - 1) / ds);
      h = std::max(h, (t.y + static_cast<long long>(t.size) + ds - 1) / ds);
    }
    double peak = 0.0;
    for (const auto& row : out.rows) peak = std::max(peak, row.attention);
    roi::GrayImage img{static_cast<std::size_t>(w), static_cast<std::size_t>(h), {}};
    img.pixels.assign(img.width * img.height, 0);
    for (std::size_t i = 0; i < tiles->size(); ++i) {
      const TileCoord& t = (*tiles)[i];
      const auto v = static_cast<std::uint8_t>(
          peak > 0.0 ? std::lround(255.0 * out.rows[i].attention / peak) : 0);
      const long long x0 = t.x / ds, y0 = t.y / ds;
      const long long x1 = (t.x + static_cast<long long>(t.size) + ds - 1) / ds;
      const long long y1 = (t.y + static_cast<long long>(t.size) + ds - 1) / ds;
      for (long long y = y0; y < y1; ++y) {
        for (long long x = x0; x < x1; ++x) {
          auto& px = img.pixels[static_cast<std::size_t>(y) * img.width + static_cast<std::size_t>(x)];
          px = std::max(px, v);
        }
      }
    }
    out.heatmap = std::move(img);
  }
  return out;
}

std::string attention_csv(const AttentionExport& e) {
  std::ostringstream os;
  os << "region_id,instance_id,attention\n";
  for (const auto& r : e.rows) os << fmt::format("{},{},{:.17g}\n", r.region_id, r.instance_id, r.attention);
  return os.str();
}

}  // namespace nmil::eval
