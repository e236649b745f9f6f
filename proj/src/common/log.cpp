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

#include "nmil/common/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace nmil {
namespace {

std::once_flag g_init_once;

spdlog::level::level_enum level_from_env() {
  const char* raw = std::getenv("NMIL_LOG");
  if (raw == nullptr) return spdlog::level::info;
  std::string_view v(raw);
  if (v == "error") return spdlog::level::err;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

}  // namespace

void init_logging() {
  std::call_once(g_init_once, [] {
    auto log = spdlog::stderr_color_mt("nmil");
    log->set_pattern("[%l] %v");
    log->set_level(level_from_env());
  });
}

std::shared_ptr<spdlog::logger> logger() {
  init_logging();
  return spdlog::get("nmil");
}

}  // namespace nmil
