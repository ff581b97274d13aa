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

#ifndef MOBCAUSAL_ERRORS_HPP_
#define MOBCAUSAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mobcausal {

// Root of every error thrown by the library. The CLI maps subclasses onto
// process exit codes (see tools/mobcausal_main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Embedding / vocabulary index out of range.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Classification target out of range.
class LabelError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. calling backward on a non-scalar node.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input that parses but is structurally wrong (too many bad rows, bad
// manifests, truncated binaries).
class FormatError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint and dataset disagree on vocabulary.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition between modules.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricsError : public Error {
 public:
  using Error::Error;
};

}  // namespace mobcausal

#endif  // MOBCAUSAL_ERRORS_HPP_
