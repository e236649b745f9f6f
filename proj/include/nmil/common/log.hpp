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

#include <memory>

#include <spdlog/spdlog.h>

namespace nmil {

// Configures the process-wide logger from NMIL_LOG (error|info|debug).
// Logs go to stderr so reports on stdout stay machine readable.
void init_logging();

std::shared_ptr<spdlog::logger> logger();

}  // namespace nmil
