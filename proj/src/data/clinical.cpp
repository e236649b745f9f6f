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

#include "nmil/data/clinical.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nmil/common/error.hpp"

namespace nmil::data {

ClinicalEncoder ClinicalEncoder::fit(const std::vector<ClinicalRow>& train_rows) {
  ClinicalEncoder enc;
  if (train_rows.empty()) return enc;
  const std::size_t fields = train_rows.front().size();
  for (const ClinicalRow& row : train_rows) {
    if (row.size() != fields) {
      throw DataError("clinical rows have " + std::to_string(fields) + " and " +
                      std::to_string(row.size()) + " fields");
    }
  }
  enc.columns_.resize(fields);
  for (std::size_t j = 0; j < fields; ++j) {
    Column& col = enc.columns_[j];
    std::set<std::string> cats;
    for (const ClinicalRow& row : train_rows) {
      if (const auto* s = std::get_if<std::string>(&row[j])) {
        col.categorical = true;
        cats.insert(*s);
      }
    }
    if (col.categorical) {
      for (const ClinicalRow& row : train_rows) {
        if (const auto* d = std::get_if<double>(&row[j])) {
          throw DataError("clinical field " + std::to_string(j) +
                          " mixes numbers and categories (" + std::to_string(*d) + ")");
        }
      }
      col.categories.assign(cats.begin(), cats.end());
      continue;
    }
    double sum = 0.0;
    for (const ClinicalRow& row : train_rows) sum += std::get<double>(row[j]);
    col.mean = sum / static_cast<double>(train_rows.size());
    double sq = 0.0;
    for (const ClinicalRow& row : train_rows) {
      const double d = std::get<double>(row[j]) - col.mean;
      sq += d * d;
    }
    col.stddev = std::sqrt(sq / static_cast<double>(train_rows.size()));
    if (!(col.stddev > 0.0)) col.stddev = 1.0;
  }
  return enc;
}

std::size_t ClinicalEncoder::width() const noexcept {
  std::size_t w = 0;
  for (const Column& c : columns_) w += c.categorical ? c.categories.size() : 1;
  return w;
}

std::vector<double> ClinicalEncoder::encode(const ClinicalRow& row) const {
  if (row.size() != columns_.size()) {
    throw DataError("clinical row has " + std::to_string(row.size()) +
                    " fields, expected " + std::to_string(columns_.size()));
  }
  std::vector<double> out;
  out.reserve(width());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const Column& col = columns_[j];
    if (!col.categorical) {
      const auto* d = std::get_if<double>(&row[j]);
      if (d == nullptr) {
        throw DataError("clinical field " + std::to_string(j) + " must be numeric");
      }
      out.push_back((*d - col.mean) / col.stddev);
      continue;
    }
    const auto* s = std::get_if<std::string>(&row[j]);
    if (s == nullptr) {
      throw DataError("clinical field " + std::to_string(j) + " must be categorical");
    }
    const auto it = std::find(col.categories.begin(), col.categories.end(), *s);
    if (it == col.categories.end()) {
      throw DataError("clinical field " + std::to_string(j) + " has unseen category '" +
                      *s + "'");
    }
    for (std::size_t k = 0; k < col.categories.size(); ++k) {
      out.push_back(col.categories.begin() + static_cast<std::ptrdiff_t>(k) == it ? 1.0 : 0.0);
    }
  }
  return out;
}

}  // namespace nmil::data
