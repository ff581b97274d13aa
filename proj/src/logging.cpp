/*
 * Copyright 2026 The mobcausal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mobcausal/logging.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <string>

namespace mobcausal {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("mobcausal");
    l->set_level(spdlog::level::warn);
    l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    return l;
  }();
  return *instance;
}

void init_logging_from_env() {
  const char* value = std::getenv(kLogLevelEnv);
  if (value == nullptr) return;
  const auto level = spdlog::level::from_str(value);
  // from_str maps unknown strings to "off"; only honor it when asked for.
  if (level == spdlog::level::off && std::string(value) != "off") {
    logger().warn("ignoring unknown {}='{}'", kLogLevelEnv, value);
    return;
  }
  logger().set_level(level);
}

}  // namespace mobcausal
