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

#ifndef MOBCAUSAL_LOGGING_HPP_
#define MOBCAUSAL_LOGGING_HPP_

#include <spdlog/spdlog.h>

#include <memory>

namespace mobcausal {

inline constexpr const char* kLogLevelEnv = "MOBCAUSAL_LOG_LEVEL";

// Shared stderr logger. Level defaults to "warn" and is overridden by the
// MOBCAUSAL_LOG_LEVEL environment variable (trace, debug, info, warn, error,
// critical, off).
spdlog::logger& logger();

void init_logging_from_env();

}  // namespace mobcausal

#endif  // MOBCAUSAL_LOGGING_HPP_
