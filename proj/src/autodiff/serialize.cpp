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

#include "nmil/autodiff/serialize.hpp"

#include "nmil/common/error.hpp"

namespace nmil::ad {

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", t.storage()}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  try {
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto data = j.at("data").get<std::vector<double>>();
    return Tensor(std::move(shape), std::move(data));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tensor: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("malformed tensor: ") + e.what());
  }
}

nlohmann::json params_to_json(const TensorMap& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, t] : params) out[name] = tensor_to_json(t);
  return out;
}

TensorMap params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("parameter block must be a JSON object");
  TensorMap out;
  for (const auto& [name, t] : j.items()) out.emplace(name, tensor_from_json(t));
  return out;
}

}  // namespace nmil::ad
