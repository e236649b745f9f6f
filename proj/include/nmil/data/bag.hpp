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

#include "nmil/autodiff/tensor.hpp"

namespace nmil::data {

struct InstanceVec {
  std::vector<double> values;
  std::string instance_id;
};

// A group of instances stored contiguously as an L x M matrix.
struct Region {
  std::string region_id;
  ad::Tensor instances;
  std::vector<std::string> instance_ids;
  // Per-instance class labels when known (synthetic draws, annotated tiles);
  // empty otherwise.
  std::vector<int> instance_labels;

  std::size_t size() const noexcept { return instances.rows(); }
  std::size_t dim() const noexcept { return instances.cols(); }
  InstanceVec instance(std::size_t i) const;
};

struct Bag {
  std::string bag_id;
  ad::Tensor instances;
  std::vector<std::string> instance_ids;
  std::vector<int> instance_labels;
  int label = 0;
  std::vector<double> clinical;

  std::size_t size() const noexcept { return instances.rows(); }
};

// WSI -> regions -> tiles. A flat bag is a nested bag with one region.
struct NestedBag {
  std::string bag_id;
  std::vector<Region> regions;
  int label = 0;
  std::vector<double> clinical;

  std::size_t instance_count() const noexcept;
  std::size_t dim() const;
  // Throws DataError unless there is at least one region, every region is
  // nonempty, dimensions agree, and the label is 0 or 1.
  void validate() const;
  Bag flatten() const;
};

struct SyntheticOrigin {
  std::uint64_t seed = 0;
  std::string description;
};

struct IngestedOrigin {
  std::string manifest_path;
};

struct Dataset {
  std::vector<NestedBag> train;
  std::vector<NestedBag> val;
  std::vector<NestedBag> test;
  std::size_t dim = 0;
  std::variant<SyntheticOrigin, IngestedOrigin> provenance;

  // Bag ids are unique across splits and every bag is valid with `dim`.
  void validate() const;
  std::size_t bag_count() const noexcept {
    return train.size() + val.size() + test.size();
  }
};

}  // namespace nmil::data
