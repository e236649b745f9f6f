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

#include "nmil/data/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "nmil/common/error.hpp"
#include "nmil/data/clinical.hpp"

namespace nmil::data {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string row_tag(std::size_t row) { return "row " + std::to_string(row); }

double parse_double(std::string_view s, std::size_t row, std::string_view column) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError(row_tag(row) + ": column '" + std::string(column) +
                    "' is not a finite number: '" + std::string(s) + "'");
  }
  return v;
}

struct PendingRegion {
  std::string id;
  std::vector<double> values;
  std::vector<std::string> ids;
  std::vector<int> labels;
};

struct PendingBag {
  std::size_t first_row = 0;
  std::vector<PendingRegion> regions;
  std::map<std::string, std::size_t, std::less<>> region_index;
  std::set<std::string, std::less<>> instance_ids;
};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
}

// Fits on the training bags and replaces every bag's clinical vector.
void encode_clinical(Dataset& ds, const std::map<std::string, ClinicalRow>& rows) {
  std::vector<ClinicalRow> train_rows;
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const NestedBag& b : *split) {
      if (!rows.contains(b.bag_id)) {
        throw DataError("bag '" + b.bag_id +
                        "' has no clinical vector while others do");
      }
    }
  }
  for (const NestedBag& b : ds.train) train_rows.push_back(rows.at(b.bag_id));
  if (train_rows.empty()) throw DataError("clinical encoding needs training bags");
  const ClinicalEncoder enc = ClinicalEncoder::fit(train_rows);
  for (auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (NestedBag& b : *split) b.clinical = enc.encode(rows.at(b.bag_id));
  }
}

}  // namespace

Dataset load_embeddings(const std::filesystem::path& manifest_path) {
  const json manifest = read_json(manifest_path);
  if (!manifest.contains("dim") || !manifest["dim"].is_number_unsigned() ||
      manifest["dim"].get<std::size_t>() == 0) {
    throw DataError("manifest needs a positive integer 'dim'");
  }
  if (!manifest.contains("labels") || !manifest["labels"].is_object()) {
    throw DataError("manifest needs a 'labels' object");
  }
  if (!manifest.contains("embeddings_csv") || !manifest["embeddings_csv"].is_string()) {
    throw DataError("manifest needs an 'embeddings_csv' path");
  }
  const std::size_t dim = manifest["dim"].get<std::size_t>();
  std::filesystem::path csv_path = manifest["embeddings_csv"].get<std::string>();
  if (csv_path.is_relative()) csv_path = manifest_path.parent_path() / csv_path;

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open embeddings CSV " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("embeddings CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  std::size_t col = 0;
  auto expect = [&](std::string_view name, bool optional) {
    if (col < header.size() && header[col] == name) {
      ++col;
      return true;
    }
    if (!optional) {
      throw DataError("embeddings CSV header: expected column '" + std::string(name) + "'");
    }
    return false;
  };
  expect("bag_id", false);
  const bool has_region = expect("region_id", true);
  expect("instance_id", false);
  const bool has_instance_label = expect("instance_label", true);
  const std::size_t first_feature = col;
  if (header.size() - first_feature != dim) {
    throw DataError("embeddings CSV header has " +
                    std::to_string(header.size() - first_feature) +
                    " feature columns, manifest dim is " + std::to_string(dim));
  }
  for (std::size_t f = 0; f < dim; ++f) {
    if (header[first_feature + f] != "f" + std::to_string(f)) {
      throw DataError("embeddings CSV header: expected column 'f" + std::to_string(f) + "'");
    }
  }

  const json& labels = manifest["labels"];
  std::vector<std::string> bag_order;
  std::map<std::string, PendingBag, std::less<>> bags;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(row_tag(row) + ": expected " + std::to_string(header.size()) +
                      " fields (dimension " + std::to_string(dim) + "), got " +
                      std::to_string(fields.size()));
    }
    std::size_t c = 0;
    const std::string bag_id(fields[c++]);
    const std::string region_id = has_region ? std::string(fields[c++]) : "r0";
    const std::string instance_id(fields[c++]);
    if (bag_id.empty() || instance_id.empty()) {
      throw DataError(row_tag(row) + ": empty bag_id or instance_id");
    }
    if (!labels.contains(bag_id)) {
      throw DataError(row_tag(row) + ": bag '" + bag_id + "' has no label in the manifest");
    }
    auto [it, inserted] = bags.try_emplace(bag_id);
    PendingBag& bag = it->second;
    if (inserted) {
      bag.first_row = row;
      bag_order.push_back(bag_id);
    }
    if (!bag.instance_ids.insert(instance_id).second) {
      throw DataError(row_tag(row) + ": duplicate instance_id '" + instance_id +
                      "' in bag '" + bag_id + "'");
    }
    auto [rit, rnew] = bag.region_index.try_emplace(region_id, bag.regions.size());
    if (rnew) bag.regions.push_back(PendingRegion{region_id, {}, {}, {}});
    PendingRegion& region = bag.regions[rit->second];
    if (has_instance_label) {
      region.labels.push_back(static_cast<int>(parse_double(fields[c++], row, "instance_label")));
    }
    for (std::size_t f = 0; f < dim; ++f) {
      region.values.push_back(parse_double(fields[first_feature + f], row, header[first_feature + f]));
    }
    region.ids.push_back(instance_id);
  }
  if (bags.empty()) throw DataError("embeddings CSV has no data rows");

  std::map<std::string, ClinicalRow> clinical_rows;
  auto build = [&](const std::string& bag_id) {
    PendingBag& pending = bags.at(bag_id);
    NestedBag bag;
    bag.bag_id = bag_id;
    const json& label = labels.at(bag_id);
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
      throw DataError("manifest label for bag '" + bag_id + "' must be 0 or 1");
    }
    bag.label = label.get<int>();
    if (manifest.contains("clinical") && manifest["clinical"].contains(bag_id)) {
      ClinicalRow& raw = clinical_rows[bag_id];
      for (const json& v : manifest["clinical"][bag_id]) {
        if (v.is_number()) {
          raw.emplace_back(v.get<double>());
        } else if (v.is_string()) {
          raw.emplace_back(v.get<std::string>());
        } else {
          throw DataError("clinical values for bag '" + bag_id +
                          "' must be numbers or category strings");
        }
      }
    }
    for (PendingRegion& p : pending.regions) {
      Region r;
      r.region_id = p.id;
      const std::size_t n = p.ids.size();
      r.instances = ad::Tensor({n, dim}, std::move(p.values));
      r.instance_ids = std::move(p.ids);
      r.instance_labels = std::move(p.labels);
      bag.regions.push_back(std::move(r));
    }
    return bag;
  };

  Dataset ds;
  ds.dim = dim;
  ds.provenance = IngestedOrigin{manifest_path.string()};
  if (!manifest.contains("splits")) {
    for (const std::string& id : bag_order) ds.train.push_back(build(id));
  } else {
    const json& splits = manifest["splits"];
    std::set<std::string> assigned;
    const std::pair<const char*, std::vector<NestedBag>*> targets[] = {
        {"train", &ds.train}, {"val", &ds.val}, {"test", &ds.test}};
    for (const auto& [name, target] : targets) {
      if (!splits.contains(name)) continue;
      for (const json& id_json : splits[name]) {
        const std::string id = id_json.get<std::string>();
        if (!bags.contains(id)) {
          throw DataError("split '" + std::string(name) + "' lists bag '" + id +
                          "' which has no rows in the embeddings CSV");
        }
        if (!assigned.insert(id).second) {
          throw DataError("bag '" + id + "' is listed in more than one split");
        }
        target->push_back(build(id));
      }
    }
    for (const std::string& id : bag_order) {
      if (!assigned.contains(id)) {
        throw DataError(row_tag(bags.at(id).first_row) + ": bag '" + id +
                        "' is not assigned to any split");
      }
    }
  }
  if (!clinical_rows.empty()) encode_clinical(ds, clinical_rows);
  ds.validate();
  return ds;
}

}  // namespace nmil::data
