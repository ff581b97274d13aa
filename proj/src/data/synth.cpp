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

#include "mobcausal/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mobcausal/errors.hpp"
#include "mobcausal/random.hpp"

namespace mobcausal::data {
namespace {

// 2012-04-02 00:00:00, the start of the public Foursquare collection window.
constexpr std::int64_t kEpochStart = 1333324800;
constexpr std::uint64_t kAnchorStream = 1;
constexpr std::uint64_t kTransitionStream = 2;
constexpr std::uint64_t kWalkStream = 3;

std::string padded(char prefix, std::size_t value, int width) {
  std::string digits_str = std::to_string(value);
  if (static_cast<int>(digits_str.size()) < width) {
    digits_str.insert(0, static_cast<std::size_t>(width) - digits_str.size(), '0');
  }
  return prefix + digits_str;
}

int digits(std::size_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

// Cumulative successor weights over the explore pool, built lazily per
// previous location.
class TransitionTable {
 public:
  TransitionTable(const SynthConfig& config, std::size_t routine_pool)
      : config_(config), routine_pool_(routine_pool),
        explore_(config.n_locations - routine_pool) {}

  std::size_t sample(std::size_t prev, Rng& rng) {
    const Row& row = row_for(prev);
    if (row.deterministic) return row.argmax;
    const double u = rng.uniform() * row.cumulative.back();
    auto it = std::upper_bound(row.cumulative.begin(), row.cumulative.end(), u);
    const auto k = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - row.cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(explore_) - 1));
    return routine_pool_ + k;
  }

 private:
  struct Row {
    bool deterministic = false;
    std::size_t argmax = 0;
    std::vector<double> cumulative;
  };

  const Row& row_for(std::size_t prev) {
    auto it = rows_.find(prev);
    if (it != rows_.end()) return it->second;
    Rng rng(derive_seed(config_.seed, {kTransitionStream, prev}));
    std::vector<double> z(explore_);
    for (double& v : z) v = rng.normal();
    const auto top = static_cast<std::size_t>(
        std::max_element(z.begin(), z.end()) - z.begin());
    Row row;
    row.argmax = routine_pool_ + top;
    if (std::isinf(config_.transition_sharpness)) {
      row.deterministic = true;
    } else {
      row.cumulative.resize(explore_);
      double total = 0.0;
      for (std::size_t k = 0; k < explore_; ++k) {
        total += std::exp(config_.transition_sharpness * (z[k] - z[top]));
        row.cumulative[k] = total;
      }
    }
    return rows_.emplace(prev, std::move(row)).first->second;
  }

  const SynthConfig& config_;
  std::size_t routine_pool_;
  std::size_t explore_;
  std::unordered_map<std::size_t, Row> rows_;
};

}  // namespace

void SynthConfig::validate() const {
  if (n_users == 0 || n_locations == 0 || records_per_user == 0) {
    throw ConfigError("synth: users, locations and records must be positive");
  }
  if (n_anchor_per_user == 0 || n_anchor_per_user >= n_locations) {
    throw ConfigError("synth: need 0 < n_anchor_per_user < n_locations");
  }
  const std::size_t pool = std::max(n_anchor_per_user, n_locations / 5);
  if (pool >= n_locations) {
    throw ConfigError("synth: no locations left for the explore pool");
  }
  if (!(anchor_return_prob > 0.0 && anchor_return_prob <= 1.0)) {
    throw ConfigError("synth: anchor_return_prob must be in (0, 1]");
  }
  if (!(transition_sharpness > 0.0)) {
    throw ConfigError("synth: transition_sharpness must be positive");
  }
  if (trip_min_records == 0 || trip_max_records < trip_min_records) {
    throw ConfigError("synth: invalid trip length range");
  }
  if (!(trip_gap_hours > 0.0)) {
    throw ConfigError("synth: trip_gap_hours must be positive");
  }
}

nlohmann::json SynthConfig::to_json() const {
  return {{"n_users", n_users},
          {"n_locations", n_locations},
          {"n_anchor_per_user", n_anchor_per_user},
          {"records_per_user", records_per_user},
          {"anchor_return_prob", anchor_return_prob},
          {"transition_sharpness", std::isinf(transition_sharpness)
                                       ? nlohmann::json("inf")
                                       : nlohmann::json(transition_sharpness)},
          {"seed", seed},
          {"trip_min_records", trip_min_records},
          {"trip_max_records", trip_max_records},
          {"trip_gap_hours", trip_gap_hours}};
}

bool is_routine_category(std::string_view category) {
  for (const char* c : kRoutineCategories) {
    if (category == c) return true;
  }
  return false;
}

SynthCorpus generate_checkins(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  const std::size_t pool =
      std::max(config.n_anchor_per_user, config.n_locations / 5);
  corpus.routine_pool = pool;
  const int loc_width = digits(config.n_locations - 1);
  const int user_width = digits(config.n_users - 1);

  std::vector<std::string> venue_ids(config.n_locations);
  std::vector<std::string> venue_categories(config.n_locations);
  for (std::size_t l = 0; l < config.n_locations; ++l) {
    venue_ids[l] = padded('v', l, loc_width);
    venue_categories[l] = l < pool ? kRoutineCategories[l % 3]
                                   : kExploreCategories[(l - pool) % 7];
  }
  auto lat_of = [](std::size_t l) { return 35.5 + 0.001 * static_cast<double>(l % 400); };
  auto lon_of = [](std::size_t l) { return 139.5 + 0.001 * static_cast<double>(l / 400); };

  TransitionTable transitions(config, pool);
  const std::int64_t trip_gap =
      static_cast<std::int64_t>(std::llround(config.trip_gap_hours * 3600.0));
  corpus.records.reserve(config.n_users * config.records_per_user);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    Rng anchor_rng(derive_seed(config.seed, {kAnchorStream, u}));
    std::vector<std::size_t> routine(pool);
    std::iota(routine.begin(), routine.end(), 0);
    for (std::size_t i = 0; i < config.n_anchor_per_user; ++i) {
      std::swap(routine[i], routine[i + anchor_rng.below(pool - i)]);
    }
    std::vector<std::size_t> anchors(routine.begin(),
                                     routine.begin() + config.n_anchor_per_user);
    std::vector<std::string> anchor_ids;
    for (std::size_t a : anchors) anchor_ids.push_back(venue_ids[a]);
    corpus.anchors.push_back(std::move(anchor_ids));

    Rng rng(derive_seed(config.seed, {kWalkStream, u}));
    const std::string user_id = padded('u', u, user_width);
    std::int64_t ts = kEpochStart + 3600 * rng.between(0, 23);
    auto scheduled_anchor = [&](std::int64_t t) {
      const auto slot = static_cast<std::size_t>(hour_of_day(t)) *
                        config.n_anchor_per_user / kHoursPerDay;
      return anchors[slot];
    };
    std::size_t location = scheduled_anchor(ts);
    std::size_t trip_left = static_cast<std::size_t>(rng.between(
        static_cast<std::int64_t>(config.trip_min_records),
        static_cast<std::int64_t>(config.trip_max_records)));
    for (std::size_t k = 0; k < config.records_per_user; ++k) {
      if (k > 0) {
        ts += 3600 * rng.between(1, 8);
        if (trip_left == 0) {
          ts += trip_gap;
          trip_left = static_cast<std::size_t>(rng.between(
              static_cast<std::int64_t>(config.trip_min_records),
              static_cast<std::int64_t>(config.trip_max_records)));
        }
        location = rng.bernoulli(config.anchor_return_prob)
                       ? scheduled_anchor(ts)
                       : transitions.sample(location, rng);
      }
      --trip_left;
      CheckinRecord r;
      r.user = user_id;
      r.venue = venue_ids[location];
      r.category = venue_categories[location];
      r.lat = lat_of(location);
      r.lon = lon_of(location);
      r.timestamp = ts;
      corpus.records.push_back(std::move(r));
    }
  }
  return corpus;
}

Dataset synth_generate(const SynthConfig& config,
                       const PreprocessConfig& preprocess_config) {
  return preprocess(generate_checkins(config).records, preprocess_config);
}

}  // namespace mobcausal::data
