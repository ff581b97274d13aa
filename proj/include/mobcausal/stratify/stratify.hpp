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

#ifndef MOBCAUSAL_STRATIFY_STRATIFY_HPP_
#define MOBCAUSAL_STRATIFY_STRATIFY_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobcausal/data/dataset.hpp"

namespace mobcausal::stratify {

using data::Dataset;
using data::Record;
using data::Split;
using data::Trajectory;

// Per-user anchor sets: locations the user visited more than `threshold`
// times in the train split.
class AnchorIndex {
 public:
  AnchorIndex() = default;
  AnchorIndex(std::uint32_t threshold,
              std::vector<std::vector<std::uint32_t>> anchors);

  std::uint32_t threshold() const { return threshold_; }
  std::size_t num_users() const { return anchors_.size(); }
  bool is_anchor(std::uint32_t user, std::uint32_t location) const;
  // Sorted location indices.
  const std::vector<std::uint32_t>& anchors(std::uint32_t user) const;
  std::size_t total_anchors() const;

 private:
  std::uint32_t threshold_ = 0;
  std::vector<std::vector<std::uint32_t>> anchors_;
};

AnchorIndex build_anchor_index(const Dataset& dataset, std::uint32_t threshold);

enum class Stratum : std::uint8_t { kT1 = 1, kT2 = 2 };

const char* stratum_name(Stratum stratum);

// Destination prediction: all but the last record of a trajectory are the
// input, the last record's location is the target.
struct PredictionSample {
  std::uint32_t user = 0;
  std::size_t trajectory = 0;  // index into Dataset::trajectories
  std::vector<Record> input;
  std::uint32_t target = 0;
  std::uint8_t target_hour = 0;
  std::uint32_t target_category = data::kNoCategory;
  Stratum stratum = Stratum::kT1;

  std::size_t tau() const { return input.size(); }
};

// One sample per trajectory of `split` (every split when nullopt), in
// dataset order. Trajectories shorter than two records are skipped.
std::vector<PredictionSample> make_samples(
    const Dataset& dataset, const AnchorIndex& anchors,
    std::optional<Split> split = std::nullopt);

struct StratumCounts {
  std::size_t samples = 0;
  std::size_t t1 = 0;
  std::size_t t2 = 0;
};

struct StratificationStats {
  std::uint32_t threshold = 0;
  std::size_t total_anchors = 0;
  std::size_t users_with_anchors = 0;
  StratumCounts train, valid, test;
};

StratificationStats stratification_stats(const Dataset& dataset,
                                         std::uint32_t threshold);

// Columns: threshold, total_anchors, users_with_anchors, then samples/t1/t2
// for each split.
void write_stratification_csv(const std::filesystem::path& path,
                              std::span<const StratificationStats> rows);

// One (target category, target hour) cell of the previous-location analysis.
struct GainCell {
  std::uint32_t category = data::kNoCategory;
  std::uint8_t hour = 0;
  std::size_t support = 0;
  std::size_t hits_without_prev = 0;
  std::size_t hits_with_prev = 0;
  bool reliable = false;

  double acc_without_prev() const;
  double acc_with_prev() const;
  double gain() const { return acc_with_prev() - acc_without_prev(); }
};

struct GainReport {
  std::size_t min_support = 0;
  std::vector<GainCell> cells;  // sorted by (category, hour), support > 0

  // Pooled over all hours of the given categories.
  GainCell pooled(std::span<const std::uint32_t> categories) const;
};

// Compares two count-based top-1 predictors of the next location, fitted on
// every consecutive record pair of the train trajectories and scored on every
// pair of the eval trajectories. Both are per user and restricted to
// locations of the target's category:
//   without prev: argmax_l count(user, category, hour -> l)
//   with prev:    argmax_l count(user, category, prev, hour -> l), backing
//                 off to the former when (user, category, prev, hour) is
//                 unseen.
// Ties go to the smaller location index; an unseen (user, category, hour)
// counts as a miss. Cells with support below min_support are unreliable.
GainReport prev_location_gain(std::span<const Trajectory> train,
                              std::span<const Trajectory> eval,
                              std::size_t min_support = 10);

GainReport prev_location_gain(const Dataset& dataset, Split eval_split,
                              std::size_t min_support = 10);

// Columns: category, hour, acc_without_prev, acc_with_prev, support,
// reliable. Category names come from `categories`.
void write_gain_csv(const std::filesystem::path& path, const GainReport& report,
                    const data::Vocab& categories);

std::vector<Trajectory> trajectories_in(const Dataset& dataset, Split split);

}  // namespace mobcausal::stratify

#endif  // MOBCAUSAL_STRATIFY_STRATIFY_HPP_
