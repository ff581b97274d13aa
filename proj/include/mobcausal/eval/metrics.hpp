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

#ifndef MOBCAUSAL_EVAL_METRICS_HPP_
#define MOBCAUSAL_EVAL_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobcausal/data/dataset.hpp"
#include "mobcausal/stratify/stratify.hpp"

namespace mobcausal::eval {

// 1 + number of logits strictly greater than the target's, plus the number
// of equal logits at smaller indices.
template <typename T>
std::size_t rank_of_target(std::span<const T> logits, std::size_t target);

struct Metrics {
  double recall = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

// Means over `ranks` of [rank <= k], 1/rank and 1/log2(rank + 1), the last
// two counted only within the top k. Throws UndefinedMetricsError when empty.
Metrics metrics_at_k(std::span<const std::size_t> ranks, std::size_t k);

inline const std::vector<std::size_t> kDefaultKs = {1, 5, 10};

// Metrics for one group of samples. `at` is empty when count == 0.
struct ScopeMetrics {
  std::string scope;  // "overall", "T1", "T2", or "category:<name>"
  std::size_t count = 0;
  std::map<std::size_t, Metrics> at;
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  ScopeMetrics overall;
  ScopeMetrics t1;
  ScopeMetrics t2;
  std::vector<ScopeMetrics> categories;  // category index order

  nlohmann::json to_json() const;
  // One row per scope x k: scope,k,count,recall,mrr,ndcg.
  void write_csv(const std::filesystem::path& path) const;
  double recall(std::size_t k) const { return overall.at.at(k).recall; }
};

struct RankedSample {
  std::size_t rank = 0;
  stratify::Stratum stratum = stratify::Stratum::kT1;
  std::uint32_t category = data::kNoCategory;
};

MetricsReport build_report(std::span<const RankedSample> ranked,
                           const std::vector<std::size_t>& ks,
                           const data::Vocab& categories);

}  // namespace mobcausal::eval

#endif  // MOBCAUSAL_EVAL_METRICS_HPP_
