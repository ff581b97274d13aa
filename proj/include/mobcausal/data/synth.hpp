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

#ifndef MOBCAUSAL_DATA_SYNTH_HPP_
#define MOBCAUSAL_DATA_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobcausal/data/checkin.hpp"
#include "mobcausal/data/dataset.hpp"
#include "mobcausal/data/preprocess.hpp"

namespace mobcausal::data {

// Synthetic check-in corpus with planted anchors.
//
// Locations split into a routine pool (the first max(n_anchor_per_user,
// n_locations / 5) indices, categories Home/Office/University) and an
// explore pool (everything else, seven leisure categories). Each user gets
// n_anchor_per_user anchors drawn from the routine pool. After every record
// the clock advances by 1-8 hours; the next location is then
//   - with probability anchor_return_prob, the anchor scheduled for the new
//     hour of day (slot = hour * n_anchor_per_user / 24), regardless of where
//     the user was;
//   - otherwise a draw from a categorical over the explore pool conditioned
//     on the previous location, with weights exp(sharpness * z) for fixed
//     standard-normal scores z. Infinite sharpness picks the top score.
// Records are grouped into trips of trip_min_records..trip_max_records
// separated by trip_gap_hours, so gap-based segmentation recovers them.
struct SynthConfig {
  std::size_t n_users = 200;
  std::size_t n_locations = 500;
  std::size_t n_anchor_per_user = 3;
  std::size_t records_per_user = 100;
  double anchor_return_prob = 0.5;
  double transition_sharpness = 5.0;
  std::uint64_t seed = 7;
  std::size_t trip_min_records = 5;
  std::size_t trip_max_records = 15;
  double trip_gap_hours = 96.0;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
};

struct SynthCorpus {
  std::vector<CheckinRecord> records;  // user-major, time-ordered
  std::vector<std::vector<std::string>> anchors;  // raw venue ids per user
  std::size_t routine_pool = 0;
};

inline constexpr const char* kRoutineCategories[] = {"Home", "Office",
                                                     "University"};
inline constexpr const char* kExploreCategories[] = {
    "Cafe", "Restaurant", "Park", "Shop", "Train Station", "Bar", "Museum"};

bool is_routine_category(std::string_view category);

SynthCorpus generate_checkins(const SynthConfig& config);

// generate_checkins followed by the standard preprocessing pipeline.
Dataset synth_generate(const SynthConfig& config,
                       const PreprocessConfig& preprocess_config = {});

}  // namespace mobcausal::data

#endif  // MOBCAUSAL_DATA_SYNTH_HPP_
