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
#include <variant>
#include <vector>

namespace nmil::data {

// A raw clinical field: numeric (age, size) or categorical (gender, grade).
using ClinicalValue = std::variant<double, std::string>;
using ClinicalRow = std::vector<ClinicalValue>;

// Standardizes numeric columns with training mean and population std and
// one-hot encodes categorical columns over the categories seen in training.
// A column is categorical when any training value is a string.
class ClinicalEncoder {
 public:
  static ClinicalEncoder fit(const std::vector<ClinicalRow>& train_rows);

  // Throws DataError on a field-count mismatch, a string in a numeric
  // column or a category never seen in training.
  std::vector<double> encode(const ClinicalRow& row) const;
  std::size_t fields() const noexcept { return columns_.size(); }
  std::size_t width() const noexcept;

 private:
  struct Column {
    bool categorical = false;
    double mean = 0.0;
    double stddev = 1.0;
    std::vector<std::string> categories;
  };
  std::vector<Column> columns_;
};

}  // namespace nmil::data
