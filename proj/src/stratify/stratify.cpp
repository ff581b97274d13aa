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

#include "mobcausal/stratify/stratify.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <tuple>

#include "mobcausal/errors.hpp"

namespace mobcausal::stratify {
namespace {

using Counts = std::map<std::uint32_t, std::uint32_t>;

std::optional<std::uint32_t> top(const Counts& counts) {
  std::optional<std::uint32_t> best;
  std::uint32_t best_count = 0;
  for (const auto& [location, count] : counts) {
    if (count > best_count) {
      best = location;
      best_count = count;
    }
  }
  return best;
}

StratumCounts& counts_for(StratificationStats& stats, Split split) {
  switch (split) {
    case Split::kTrain: return stats.train;
    case Split::kValid: return stats.valid;
    case Split::kTest: return stats.test;
  }
  return stats.train;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

AnchorIndex::AnchorIndex(std::uint32_t threshold,
                         std::vector<std::vector<std::uint32_t>> anchors)
    : threshold_(threshold), anchors_(std::move(anchors)) {
  for (auto& set : anchors_) std::sort(set.begin(), set.end());
}

bool AnchorIndex::is_anchor(std::uint32_t user, std::uint32_t location) const {
  if (user >= anchors_.size()) return false;
  const auto& set = anchors_[user];
  return std::binary_search(set.begin(), set.end(), location);
}

const std::vector<std::uint32_t>& AnchorIndex::anchors(
    std::uint32_t user) const {
  static const std::vector<std::uint32_t> kEmpty;
  return user < anchors_.size() ? anchors_[user] : kEmpty;
}

std::size_t AnchorIndex::total_anchors() const {
  std::size_t n = 0;
  for (const auto& set : anchors_) n += set.size();
  return n;
}

AnchorIndex build_anchor_index(const Dataset& dataset,
                               std::uint32_t threshold) {
  std::vector<Counts> visits(dataset.users.size());
  for (const auto& traj : dataset.trajectories) {
    if (traj.split != Split::kTrain) continue;
    for (const auto& r : traj.records) ++visits.at(r.user)[r.location];
  }
  std::vector<std::vector<std::uint32_t>> anchors(visits.size());
  for (std::size_t u = 0; u < visits.size(); ++u) {
    for (const auto& [location, count] : visits[u]) {
      if (count > threshold) anchors[u].push_back(location);
    }
  }
  return AnchorIndex(threshold, std::move(anchors));
}

const char* stratum_name(Stratum stratum) {
  return stratum == Stratum::kT1 ? "T1" : "T2";
}

std::vector<PredictionSample> make_samples(const Dataset& dataset,
                                           const AnchorIndex& anchors,
                                           std::optional<Split> split) {
  std::vector<PredictionSample> samples;
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& traj = dataset.trajectories[i];
    if (split && traj.split != *split) continue;
    if (traj.records.size() < 2) continue;
    PredictionSample s;
    s.user = traj.user;
    s.trajectory = i;
    s.input.assign(traj.records.begin(), traj.records.end() - 1);
    const Record& last = traj.records.back();
    s.target = last.location;
    s.target_hour = last.hour;
    s.target_category = last.category;
    s.stratum =
        anchors.is_anchor(traj.user, last.location) ? Stratum::kT1 : Stratum::kT2;
    samples.push_back(std::move(s));
  }
  return samples;
}

StratificationStats stratification_stats(const Dataset& dataset,
                                         std::uint32_t threshold) {
  AnchorIndex index = build_anchor_index(dataset, threshold);
  StratificationStats stats;
  stats.threshold = threshold;
  stats.total_anchors = index.total_anchors();
  for (std::uint32_t u = 0; u < index.num_users(); ++u) {
    stats.users_with_anchors += index.anchors(u).empty() ? 0 : 1;
  }
  for (const auto& s : make_samples(dataset, index)) {
    StratumCounts& c = counts_for(stats, dataset.trajectories[s.trajectory].split);
    ++c.samples;
    ++(s.stratum == Stratum::kT1 ? c.t1 : c.t2);
  }
  return stats;
}

void write_stratification_csv(const std::filesystem::path& path,
                              std::span<const StratificationStats> rows) {
  std::ofstream out = open_csv(path);
  out << "threshold,total_anchors,users_with_anchors";
  for (const char* split : {"train", "valid", "test"}) {
    out << ',' << split << "_samples," << split << "_t1," << split << "_t2";
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.threshold << ',' << r.total_anchors << ',' << r.users_with_anchors;
    for (const StratumCounts* c : {&r.train, &r.valid, &r.test}) {
      out << ',' << c->samples << ',' << c->t1 << ',' << c->t2;
    }
    out << '\n';
  }
}

double GainCell::acc_without_prev() const {
  return support == 0 ? 0.0
                      : static_cast<double>(hits_without_prev) /
                            static_cast<double>(support);
}

double GainCell::acc_with_prev() const {
  return support == 0 ? 0.0
                      : static_cast<double>(hits_with_prev) /
                            static_cast<double>(support);
}

GainCell GainReport::pooled(std::span<const std::uint32_t> categories) const {
  GainCell total;
  for (const auto& cell : cells) {
    if (std::find(categories.begin(), categories.end(), cell.category) ==
        categories.end()) {
      continue;
    }
    total.support += cell.support;
    total.hits_without_prev += cell.hits_without_prev;
    total.hits_with_prev += cell.hits_with_prev;
  }
  total.reliable = total.support >= min_support;
  return total;
}

GainReport prev_location_gain(std::span<const Trajectory> train,
                              std::span<const Trajectory> eval,
                              std::size_t min_support) {
  using HourKey = std::tuple<std::uint32_t, std::uint32_t, std::uint8_t>;
  using PrevKey =
      std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, std::uint8_t>;
  std::map<HourKey, Counts> by_hour;
  std::map<PrevKey, Counts> by_prev;
  for (const auto& traj : train) {
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
      const Record& prev = traj.records[k - 1];
      const Record& next = traj.records[k];
      ++by_hour[{next.user, next.category, next.hour}][next.location];
      ++by_prev[{next.user, next.category, prev.location, next.hour}]
               [next.location];
    }
  }

  std::map<std::pair<std::uint32_t, std::uint8_t>, GainCell> cells;
  for (const auto& traj : eval) {
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
      const Record& prev = traj.records[k - 1];
      const Record& next = traj.records[k];
      std::optional<std::uint32_t> without;
      if (auto it = by_hour.find({next.user, next.category, next.hour});
          it != by_hour.end()) {
        without = top(it->second);
      }
      std::optional<std::uint32_t> with = without;
      if (auto it =
              by_prev.find({next.user, next.category, prev.location, next.hour});
          it != by_prev.end()) {
        with = top(it->second);
      }
      GainCell& cell = cells[{next.category, next.hour}];
      cell.category = next.category;
      cell.hour = next.hour;
      ++cell.support;
      cell.hits_without_prev += without == next.location ? 1 : 0;
      cell.hits_with_prev += with == next.location ? 1 : 0;
    }
  }

  GainReport report;
  report.min_support = min_support;
  for (auto& [key, cell] : cells) {
    cell.reliable = cell.support >= min_support;
    report.cells.push_back(cell);
  }
  return report;
}

std::vector<Trajectory> trajectories_in(const Dataset& dataset, Split split) {
  std::vector<Trajectory> out;
  for (const auto& t : dataset.trajectories) {
    if (t.split == split) out.push_back(t);
  }
  return out;
}

GainReport prev_location_gain(const Dataset& dataset, Split eval_split,
                              std::size_t min_support) {
  auto train = trajectories_in(dataset, Split::kTrain);
  auto eval = trajectories_in(dataset, eval_split);
  if (train.empty() || eval.empty()) {
    throw EmptyDatasetError("prev_location_gain: train and " +
                            std::string(data::split_name(eval_split)) +
                            " splits must be non-empty");
  }
  return prev_location_gain(train, eval, min_support);
}

void write_gain_csv(const std::filesystem::path& path, const GainReport& report,
                    const data::Vocab& categories) {
  std::ofstream out = open_csv(path);
  out << "category,hour,acc_without_prev,acc_with_prev,support,reliable\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& cell : report.cells) {
    const std::string name = cell.category == data::kNoCategory
                                 ? std::string("unknown")
                                 : categories.raw(cell.category);
    out << '"' << name << "\"," << static_cast<int>(cell.hour) << ','
        << cell.acc_without_prev() << ',' << cell.acc_with_prev() << ','
        << cell.support << ',' << (cell.reliable ? 1 : 0) << '\n';
  }
}

}  // namespace mobcausal::stratify
