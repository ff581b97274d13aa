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

#ifndef MOBCAUSAL_DATA_PREPROCESS_HPP_
#define MOBCAUSAL_DATA_PREPROCESS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mobcausal/data/checkin.hpp"
#include "mobcausal/data/dataset.hpp"

namespace mobcausal::data {

// A trajectory before indexing.
struct RawTrajectory {
  std::string user;
  std::vector<CheckinRecord> records;
};

// Buckets records by user (users in lexicographic order) and sorts each
// bucket by timestamp, keeping file order for equal timestamps.
std::vector<std::vector<CheckinRecord>> group_by_user(
    std::vector<CheckinRecord> records);

// Starts a new trajectory whenever consecutive records are more than
// `gap_hours` apart. `user_records` must belong to one user and be sorted by
// timestamp (ContractError otherwise).
std::vector<RawTrajectory> segment_trajectories(
    std::span<const CheckinRecord> user_records, double gap_hours);

struct FilterConfig {
  std::size_t min_records = 5;
  std::size_t min_trajectories = 5;
};

struct FilterResult {
  std::vector<RawTrajectory> trajectories;
  std::size_t passes = 0;
  std::size_t dropped_trajectories = 0;
  std::size_t dropped_users = 0;
};

// Drops short trajectories, then users left with too few trajectories,
// repeating until nothing changes. Throws EmptyDatasetError if nothing
// survives.
FilterResult filter_dataset(std::vector<RawTrajectory> trajectories,
                            const FilterConfig& config = {});

// Assigns lexicographic 0-based indices to users, locations and categories
// and numbers each user's trajectories 0, 1, ... in input order. Every
// trajectory starts in the train split.
Dataset build_vocab(const std::vector<RawTrajectory>& trajectories);

// Per-user trajectory counts for (train, valid, test): largest-remainder
// rounding with ties going to the earlier split, then every split with a
// positive ratio gets at least one trajectory, taken from the largest split.
std::array<std::size_t, 3> split_counts(std::size_t n,
                                        const SplitRatios& ratios);

// Chronological per-user split: a user's earliest trajectories go to train,
// the next to valid, the latest to test.
Dataset split_dataset(Dataset dataset, const SplitRatios& ratios);

void validate_ratios(const SplitRatios& ratios);

struct PreprocessConfig {
  double gap_hours = 72.0;
  FilterConfig filter;
  SplitRatios ratios;
};

struct PreprocessStats {
  std::size_t input_records = 0;
  std::size_t input_users = 0;
  std::size_t segmented_trajectories = 0;
  FilterResult filter;  // trajectories moved out
};

// group -> segment -> filter -> index -> split.
Dataset preprocess(std::vector<CheckinRecord> records,
                   const PreprocessConfig& config = {},
                   PreprocessStats* stats = nullptr);

}  // namespace mobcausal::data

#endif  // MOBCAUSAL_DATA_PREPROCESS_HPP_
