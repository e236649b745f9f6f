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

#include <filesystem>

#include "nmil/data/bag.hpp"

namespace nmil::data {

// Reads an embedding manifest (JSON) and the CSV it references:
//
//   {"dim": M, "labels": {bag_id: 0|1}, "clinical": {bag_id: [..]},
//    "splits": {"train": [..], "val": [..], "test": [..]},
//    "embeddings_csv": "relative/or/absolute.csv"}
//
// CSV header: bag_id,[region_id,]instance_id,[instance_label,]f0..f{M-1}.
// Without region_id every bag becomes a single implicit region. Without
// "splits" every bag lands in train. Errors cite the 1-based data row.
// Clinical entries mix numbers and category strings; they are encoded with a
// ClinicalEncoder fitted on the training bags (all bags or none must have one).
Dataset load_embeddings(const std::filesystem::path& manifest_path);

}  // namespace nmil::data
