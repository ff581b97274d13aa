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

#include "mobcausal/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mobcausal/errors.hpp"
#include "mobcausal/logging.hpp"

namespace mobcausal::data {

std::vector<std::vector<CheckinRecord>> group_by_user(
    std::vector<CheckinRecord> records) {
  std::map<std::string, std::vector<CheckinRecord>> by_user;
  for (auto& r : records) {
    std::string user = r.user;
    by_user[std::move(user)].push_back(std::move(r));
  }
  std::vector<std::vector<CheckinRecord>> grouped;
  grouped.reserve(by_user.size());
  for (auto& [user, recs] : by_user) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const CheckinRecord& a, const CheckinRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
    grouped.push_back(std::move(recs));
  }
  return grouped;
}

std::vector<RawTrajectory> segment_trajectories(
    std::span<const CheckinRecord> user_records, double gap_hours) {
  if (!(gap_hours > 0.0)) {
    throw ConfigError("segmentation gap must be positive");
  }
  std::vector<RawTrajectory> out;
  if (user_records.empty()) return out;
  const double max_gap_seconds = gap_hours * 3600.0;
  const std::string& user = user_records.front().user;
  for (std::size_t i = 0; i < user_records.size(); ++i) {
    const CheckinRecord& r = user_records[i];
    if (r.user != user) {
      throw ContractError("segment_trajectories: records of users '" + user +
                          "' and '" + r.user + "' mixed");
    }
    const bool new_trip =
        i == 0 || static_cast<double>(r.timestamp -
                                      user_records[i - 1].timestamp) >
                      max_gap_seconds;
    if (i > 0 && r.timestamp < user_records[i - 1].timestamp) {
      throw ContractError("segment_trajectories: records of user '" + user +
                          "' are not sorted by time");
    }
    if (new_trip) out.push_back(RawTrajectory{user, {}});
    out.back().records.push_back(r);
  }
  return out;
}

FilterResult filter_dataset(std::vector<RawTrajectory> trajectories,
                            const FilterConfig& config) {
  FilterResult result;
  const std::size_t input_trajectories = trajectories.size();
  std::map<std::string, std::size_t> input_users;
  for (const auto& t : trajectories) ++input_users[t.user];

  bool changed = true;
  while (changed) {
    ++result.passes;
    const std::size_t before = trajectories.size();
    std::erase_if(trajectories, [&](const RawTrajectory& t) {
      return t.records.size() < config.min_records;
    });
    std::map<std::string, std::size_t> per_user;
    for (const auto& t : trajectories) ++per_user[t.user];
    std::erase_if(trajectories, [&](const RawTrajectory& t) {
      return per_user[t.user] < config.min_trajectories;
    });
    changed = trajectories.size() != before;
  }

  std::map<std::string, std::size_t> kept_users;
  for (const auto& t : trajectories) ++kept_users[t.user];
  result.dropped_trajectories = input_trajectories - trajectories.size();
  result.dropped_users = input_users.size() - kept_users.size();
  if (trajectories.empty()) {
    throw EmptyDatasetError(
        "filtering removed every trajectory (" +
        std::to_string(input_trajectories) + " trajectories from " +
        std::to_string(input_users.size()) + " users; min_records=" +
        std::to_string(config.min_records) + ", min_trajectories=" +
        std::to_string(config.min_trajectories) + ")");
  }
  result.trajectories = std::move(trajectories);
  return result;
}

Dataset build_vocab(const std::vector<RawTrajectory>& trajectories) {
  std::vector<std::string> users, venues, categories;
  for (const auto& t : trajectories) {
    users.push_back(t.user);
    for (const auto& r : t.records) {
      venues.push_back(r.venue);
      if (!r.category.empty()) categories.push_back(r.category);
    }
  }
  Dataset dataset;
  dataset.users = Vocab::from_unsorted(std::move(users));
  dataset.locations = Vocab::from_unsorted(std::move(venues));
  dataset.categories = Vocab::from_unsorted(std::move(categories));

  std::vector<std::uint32_t> next_ordinal(dataset.users.size(), 0);
  dataset.trajectories.reserve(trajectories.size());
  for (const auto& raw : trajectories) {
    Trajectory t;
    t.user = dataset.users.index(raw.user);
    t.ordinal = next_ordinal[t.user]++;
    t.records.reserve(raw.records.size());
    for (const auto& r : raw.records) {
      Record rec;
      rec.user = t.user;
      rec.location = dataset.locations.index(r.venue);
      rec.hour = static_cast<std::uint8_t>(hour_of_day(r.timestamp));
      rec.ts = r.timestamp;
      rec.category =
          r.category.empty() ? kNoCategory : dataset.categories.index(r.category);
      t.records.push_back(rec);
    }
    dataset.trajectories.push_back(std::move(t));
  }
  std::stable_sort(dataset.trajectories.begin(), dataset.trajectories.end(),
                   [](const Trajectory& a, const Trajectory& b) {
                     return a.user != b.user ? a.user < b.user
                                             : a.ordinal < b.ordinal;
                   });
  return dataset;
}

void validate_ratios(const SplitRatios& ratios) {
  const double parts[] = {ratios.train, ratios.valid, ratios.test};
  double total = 0.0;
  for (double p : parts) {
    if (!(p >= 0.0)) throw ConfigError("split ratios must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

std::array<std::size_t, 3> split_counts(std::size_t n,
                                        const SplitRatios& ratios) {
  validate_ratios(ratios);
  const double r[3] = {ratios.train, ratios.valid, ratios.test};
  std::array<std::size_t, 3> counts{};
  double frac[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * r[i];
    const double whole = std::floor(quota + 1e-9);
    counts[i] = static_cast<std::size_t>(whole);
    frac[i] = quota - whole;
    assigned += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    counts[order[k]] += 1;
    ++assigned;
  }
  while (assigned > n) {  // only reachable through the epsilon above
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  for (int i = 0; i < 3; ++i) {
    if (r[i] > 0.0 && counts[i] == 0) {
      auto donor = std::max_element(counts.begin(), counts.end());
      if (*donor > 1) {
        --*donor;
        counts[i] = 1;
      }
    }
  }
  return counts;
}

Dataset split_dataset(Dataset dataset, const SplitRatios& ratios) {
  validate_ratios(ratios);
  dataset.ratios = ratios;
  auto& trajs = dataset.trajectories;
  std::size_t begin = 0;
  while (begin < trajs.size()) {
    std::size_t end = begin;
    while (end < trajs.size() && trajs[end].user == trajs[begin].user) ++end;
    const auto counts = split_counts(end - begin, ratios);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t k = i - begin;
      trajs[i].split = k < counts[0]               ? Split::kTrain
                       : k < counts[0] + counts[1] ? Split::kValid
                                                   : Split::kTest;
    }
    begin = end;
  }
  return dataset;
}

Dataset preprocess(std::vector<CheckinRecord> records,
                   const PreprocessConfig& config, PreprocessStats* stats) {
  PreprocessStats local;
  local.input_records = records.size();
  auto grouped = group_by_user(std::move(records));
  local.input_users = grouped.size();
  std::vector<RawTrajectory> segmented;
  for (const auto& user_records : grouped) {
    auto trips = segment_trajectories(user_records, config.gap_hours);
    for (auto& t : trips) segmented.push_back(std::move(t));
  }
  local.segmented_trajectories = segmented.size();
  local.filter = filter_dataset(std::move(segmented), config.filter);
  Dataset dataset =
      split_dataset(build_vocab(local.filter.trajectories), config.ratios);
  logger().info("preprocess: {} records -> {} trajectories, {} users, {} locations",
                local.input_records, dataset.trajectories.size(),
                dataset.users.size(), dataset.locations.size());
  local.filter.trajectories.clear();
  if (stats != nullptr) *stats = std::move(local);
  return dataset;
}

}  // namespace mobcausal::data
