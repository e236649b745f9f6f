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

#include <ostream>
#include <string>

#include <json.hpp>

namespace nmil::app {

// Each command reads a fully resolved config (see default_config), writes
// its artifacts under config["out"] and prints a short summary to `os`.
// With dry_run set, the plan is printed and nothing is written.
int run_command(const std::string& name, const nlohmann::json& config, bool dry_run,
                std::ostream& os);

}  // namespace nmil::app
