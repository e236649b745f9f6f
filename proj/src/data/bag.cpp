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

#include "nmil/data/bag.hpp"

#include <algorithm>
#include <set>

#include "nmil/common/error.hpp"

namespace nmil::data {

InstanceVec Region::instance(std::size_t i) const {
  InstanceVec v;
  const auto row = instances.row(i);
  v.values.assign(row.begin(), row.end());
  if (i < instance_ids.size()) v.instance_id = instance_ids[i];
  return v;
}

std::size_t NestedBag::instance_count() const noexcept {
  std::size_t n = 0;
  for (const Region& r : regions) n += r.size();
  return n;
}

std::size_t NestedBag::dim() const {
  if (regions.empty()) throw DataError("bag '" + bag_id + "' has no regions");
  return regions.front().dim();
}

void NestedBag::validate() const {
  if (regions.empty()) throw DataError("bag '" + bag_id + "' has no regions");
  if (label != 0 && label != 1) {
    throw DataError("bag '" + bag_id + "' label must be 0 or 1");
  }
  const std::size_t m = regions.front().dim();
  for (const Region& r : regions) {
    if (r.size() == 0) {
      throw DataError("bag '" + bag_id + "' region '" + r.region_id +
                      "' is empty");
    }
    if (r.dim() != m) {
      throw DataError("bag '" + bag_id + "' region '" + r.region_id +
                      "' has dimension " + std::to_string(r.dim()) +
                      ", expected " + std::to_string(m));
    }
    if (r.instance_ids.size() != r.size()) {
      throw DataError("bag '" + bag_id + "' region '" + r.region_id +
                      "' has mismatched instance ids");
    }
  }
}

Bag NestedBag::flatten() const {
  validate();
  Bag bag;
  bag.bag_id = bag_id;
  bag.label = label;
  bag.clinical = clinical;
  const std::size_t m = dim();
  std::vector<double> values;
  values.reserve(instance_count() * m);
  bool labelled = true;
  for (const Region& r : regions) {
    values.insert(values.end(), r.instances.data().begin(),
                  r.instances.data().end());
    bag.instance_ids.insert(bag.instance_ids.end(), r.instance_ids.begin(),
                            r.instance_ids.end());
    labelled = labelled && r.instance_labels.size() == r.size();
  }
  if (labelled) {
    for (const Region& r : regions) {
      bag.instance_labels.insert(bag.instance_labels.end(),
                                 r.instance_labels.begin(),
                                 r.instance_labels.end());
    }
  }
  bag.instances = ad::Tensor({instance_count(), m}, std::move(values));
  return bag;
}

void Dataset::validate() const {
  std::set<std::string> seen;
  for (const auto* split : {&train, &val, &test}) {
    for (const NestedBag& b : *split) {
      b.validate();
      if (b.dim() != dim) {
        throw DataError("bag '" + b.bag_id + "' has dimension " +
                        std::to_string(b.dim()) + ", dataset expects " +
                        std::to_string(dim));
      }
      if (!seen.insert(b.bag_id).second) {
        throw DataError("bag id '" + b.bag_id + "' appears more than once");
      }
    }
  }
}

}  // namespace nmil::data
