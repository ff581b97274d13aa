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

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "mobcausal/data/synth.hpp"
#include "mobcausal/errors.hpp"

namespace mobcausal::data {
namespace {

bool same_corpus(const SynthCorpus& a, const SynthCorpus& b) {
  if (a.records.size() != b.records.size() || a.anchors != b.anchors) {
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.user != y.user || x.venue != y.venue || x.category != y.category ||
        x.timestamp != y.timestamp || x.lat != y.lat || x.lon != y.lon) {
      return false;
    }
  }
  return true;
}

double anchor_fraction(const SynthCorpus& corpus) {
  std::map<std::string, std::set<std::string>> anchors;
  std::size_t user_index = 0;
  std::string last_user;
  for (const auto& r : corpus.records) {
    if (r.user != last_user) {
      anchors[r.user] = std::set<std::string>(
          corpus.anchors[user_index].begin(), corpus.anchors[user_index].end());
      ++user_index;
      last_user = r.user;
    }
  }
  std::size_t hits = 0;
  std::size_t total = 0;
  last_user.clear();
  for (const auto& r : corpus.records) {
    // The first record of each user is always placed at an anchor.
    if (r.user != last_user) {
      last_user = r.user;
      continue;
    }
    ++total;
    hits += anchors[r.user].count(r.venue);
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

TEST(Synth, FixedSeedIsBitIdentical) {
  SynthConfig config;
  config.n_users = 20;
  EXPECT_TRUE(same_corpus(generate_checkins(config), generate_checkins(config)));
  SynthConfig other = config;
  other.seed = config.seed + 1;
  EXPECT_FALSE(same_corpus(generate_checkins(config), generate_checkins(other)));
}

TEST(Synth, AnchorFractionTracksReturnProbability) {
  for (double p : {0.3, 0.5, 0.8}) {
    SynthConfig config;
    config.n_users = 120;
    config.records_per_user = 100;
    config.anchor_return_prob = p;
    SynthCorpus corpus = generate_checkins(config);
    ASSERT_GE(corpus.records.size(), 10000u);
    // Explore-pool draws never land on routine locations, so the visit
    // fraction equals the return probability up to sampling noise.
    EXPECT_NEAR(anchor_fraction(corpus), p, 0.05) << "p=" << p;
  }
}

TEST(Synth, ReturnProbabilityOneVisitsOnlyAnchors) {
  SynthConfig config;
  config.n_users = 10;
  config.anchor_return_prob = 1.0;
  EXPECT_DOUBLE_EQ(anchor_fraction(generate_checkins(config)), 1.0);
}

TEST(Synth, InfiniteSharpnessMakesTransitionsDeterministic) {
  SynthConfig config;
  config.n_users = 50;
  config.transition_sharpness = std::numeric_limits<double>::infinity();
  SynthCorpus corpus = generate_checkins(config);
  std::map<std::string, std::set<std::string>> successors;
  for (std::size_t i = 1; i < corpus.records.size(); ++i) {
    const auto& prev = corpus.records[i - 1];
    const auto& next = corpus.records[i];
    if (prev.user != next.user || is_routine_category(next.category)) continue;
    successors[prev.venue].insert(next.venue);
  }
  ASSERT_FALSE(successors.empty());
  for (const auto& [prev, next] : successors) {
    EXPECT_EQ(next.size(), 1u) << prev;
  }
}

TEST(Synth, TripsSurviveSegmentation) {
  SynthConfig config;
  config.n_users = 30;
  Dataset d = synth_generate(config);
  EXPECT_EQ(d.users.size(), 30u);
  for (const auto& t : d.trajectories) {
    EXPECT_GE(t.records.size(), config.trip_min_records);
    EXPECT_LE(t.records.size(), config.trip_max_records);
  }
}

TEST(Synth, RejectsInvalidConfig) {
  SynthConfig config;
  config.n_anchor_per_user = config.n_locations;
  EXPECT_THROW(config.validate(), ConfigError);
  config = {};
  config.anchor_return_prob = 1.5;
  EXPECT_THROW(config.validate(), ConfigError);
  config = {};
  config.transition_sharpness = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
}

}  // namespace
}  // namespace mobcausal::data
