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

#ifndef MOBCAUSAL_TESTS_GAIN_ORACLE_HPP_
#define MOBCAUSAL_TESTS_GAIN_ORACLE_HPP_

#include <map>
#include <utility>
#include <vector>

#include "mobcausal/data/dataset.hpp"

namespace mobcausal::testing {

using data::Trajectory;

// Independent recomputation: for each eval pair, rescan all train pairs.
struct OracleCell {
  std::size_t support = 0, without = 0, with = 0;
};

inline std::map<std::pair<std::uint32_t, int>, OracleCell> gain_oracle(
    const std::vector<Trajectory>& train, const std::vector<Trajectory>& eval,
    std::size_t n_locations) {
  struct Pair {
    std::uint32_t user, category, prev, next;
    int hour;
  };
  std::vector<Pair> train_pairs;
  for (const auto& t : train) {
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      const auto& n = t.records[k];
      train_pairs.push_back({n.user, n.category, t.records[k - 1].location,
                             n.location, n.hour});
    }
  }
  auto argmax = [&](const std::vector<int>& counts) {
    int best = -1, best_count = 0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
      if (counts[l] > best_count) {
        best = static_cast<int>(l);
        best_count = counts[l];
      }
    }
    return best;
  };
  std::map<std::pair<std::uint32_t, int>, OracleCell> cells;
  for (const auto& t : eval) {
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      const auto& n = t.records[k];
      const auto prev = t.records[k - 1].location;
      std::vector<int> a(n_locations, 0), b(n_locations, 0);
      for (const auto& p : train_pairs) {
        if (p.user != n.user || p.category != n.category || p.hour != n.hour) {
          continue;
        }
        ++a[p.next];
        if (p.prev == prev) ++b[p.next];
      }
      const int pa = argmax(a);
      const int pb = argmax(b) >= 0 ? argmax(b) : pa;
      auto& cell = cells[{n.category, n.hour}];
      ++cell.support;
      cell.without += pa == static_cast<int>(n.location) ? 1 : 0;
      cell.with += pb == static_cast<int>(n.location) ? 1 : 0;
    }
  }
  return cells;
}

}  // namespace mobcausal::testing

#endif  // MOBCAUSAL_TESTS_GAIN_ORACLE_HPP_
