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

#include "mobcausal/model/batch.hpp"

#include <algorithm>
#include <numeric>

#include "mobcausal/errors.hpp"

namespace mobcausal::model {

std::size_t SequenceBatch::valid_positions() const {
  return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
}

std::vector<std::size_t> SequenceBatch::rows_in(Stratum stratum) const {
  std::vector<std::size_t> rows;
  for (std::size_t b = 0; b < size; ++b) {
    if (strata[b] == stratum) rows.push_back(b);
  }
  return rows;
}

std::vector<std::size_t> SequenceBatch::last_locations() const {
  std::vector<std::size_t> out(size);
  for (std::size_t b = 0; b < size; ++b) {
    out[b] = locations[flat(lengths[b] - 1, b)];
  }
  return out;
}

SequenceBatch make_batch(std::span<const PredictionSample> samples,
                         std::span<const std::size_t> order,
                         std::size_t min_steps) {
  if (order.empty()) throw UsageError("make_batch: empty batch");
  SequenceBatch batch;
  batch.size = order.size();
  batch.steps = min_steps;
  for (std::size_t i : order) {
    const PredictionSample& s = samples[i];
    if (s.input.empty()) throw ContractError("make_batch: sample with tau = 0");
    batch.steps = std::max(batch.steps, s.tau());
  }
  batch.locations.assign(batch.steps * batch.size, 0);
  batch.hours.assign(batch.steps * batch.size, 0);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const PredictionSample& s = samples[order[b]];
    batch.users.push_back(s.user);
    batch.lengths.push_back(s.tau());
    batch.targets.push_back(s.target);
    batch.strata.push_back(s.stratum);
    batch.sample_ids.push_back(order[b]);
    for (std::size_t k = 0; k < s.tau(); ++k) {
      batch.locations[batch.flat(k, b)] = s.input[k].location;
      batch.hours[batch.flat(k, b)] = s.input[k].hour;
    }
  }
  return batch;
}

SequenceBatch make_batch(std::span<const PredictionSample> samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  return make_batch(samples, order);
}

}  // namespace mobcausal::model
