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

#include <json.hpp>

#include "nmil/autodiff/tensor.hpp"

namespace nmil::ad {

// {"shape": [...], "data": [...]} with row-major data.
nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const TensorMap& params);
TensorMap params_from_json(const nlohmann::json& j);

}  // namespace nmil::ad
