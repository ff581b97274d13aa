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

#ifndef MOBCAUSAL_MODEL_BATCH_HPP_
#define MOBCAUSAL_MODEL_BATCH_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mobcausal/stratify/stratify.hpp"

namespace mobcausal::model {

using stratify::PredictionSample;
using stratify::Stratum;

// Padded, step-major view of several samples. Position (step k, row b) lives
// at flat index k * size + b; padded positions hold location/hour 0.
struct SequenceBatch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> users;      // [size]
  std::vector<std::size_t> lengths;    // [size], tau of each row
  std::vector<std::size_t> locations;  // [steps * size]
  std::vector<std::size_t> hours;      // [steps * size]
  std::vector<std::size_t> targets;    // [size]
  std::vector<Stratum> strata;         // [size]
  std::vector<std::size_t> sample_ids; // caller's index of each row

  std::size_t flat(std::size_t step, std::size_t row) const {
    return step * size + row;
  }
  bool valid(std::size_t step, std::size_t row) const {
    return step < lengths[row];
  }
  std::size_t valid_positions() const;
  std::size_t padded_positions() const { return steps * size - valid_positions(); }
  std::vector<std::size_t> rows_in(Stratum stratum) const;
  // Locations at each row's final input step.
  std::vector<std::size_t> last_locations() const;
};

// Rows follow `order` (indices into `samples`). `min_steps` pads beyond the
// longest row.
SequenceBatch make_batch(std::span<const PredictionSample> samples,
                         std::span<const std::size_t> order,
                         std::size_t min_steps = 0);
SequenceBatch make_batch(std::span<const PredictionSample> samples);

}  // namespace mobcausal::model

#endif  // MOBCAUSAL_MODEL_BATCH_HPP_
