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

#include "nmil/data/standardize.hpp"

#include <cmath>

#include "nmil/common/error.hpp"

namespace nmil::data {

Standardizer Standardizer::fit(const std::vector<NestedBag>& bags) {
  if (bags.empty()) throw DataError("cannot fit a standardizer on zero bags");
  const std::size_t m = bags.front().dim();
  Standardizer s;
  s.mean.assign(m, 0.0);
  s.stddev.assign(m, 0.0);
  double n = 0.0;
  for (const NestedBag& b : bags) {
    for (const Region& r : b.regions) {
      if (r.dim() != m) throw DataError("bag '" + b.bag_id + "' has a different dimension");
      for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) s.mean[j] += r.instances.at(i, j);
      }
      n += static_cast<double>(r.size());
    }
  }
  for (double& v : s.mean) v /= n;
  for (const NestedBag& b : bags) {
    for (const Region& r : b.regions) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          const double d = r.instances.at(i, j) - s.mean[j];
          s.stddev[j] += d * d;
        }
      }
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

void Standardizer::apply(NestedBag& bag) const {
  for (Region& r : bag.regions) {
    if (r.dim() != mean.size()) {
      throw DataError("bag '" + bag.bag_id + "' does not match the standardizer width");
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < mean.size(); ++j) {
        double& v = r.instances.at(i, j);
        v = (v - mean[j]) / stddev[j];
      }
    }
  }
}

void Standardizer::apply(Dataset& ds) const {
  for (auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (NestedBag& b : *split) apply(b);
  }
}

}  // namespace nmil::data
