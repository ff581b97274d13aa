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

#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mobcausal/data/checkin.hpp"
#include "mobcausal/data/dataset_io.hpp"
#include "mobcausal/data/preprocess.hpp"
#include "mobcausal/data/synth.hpp"
#include "mobcausal/errors.hpp"
#include "mobcausal/random.hpp"

namespace mobcausal::data {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("mobcausal_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string row(const std::string& user, const std::string& venue,
                const std::string& lat, int tz, const std::string& time) {
  return user + "\t" + venue + "\t4bf58dd8d48988d1e0931735\tCafe\t" + lat +
         "\t139.7\t" + std::to_string(tz) + "\t" + time + "\n";
}

CheckinRecord at_hour(const std::string& user, double hours,
                      const std::string& venue = "v") {
  CheckinRecord r;
  r.user = user;
  r.venue = venue;
  r.category = "Cafe";
  r.timestamp = static_cast<std::int64_t>(hours * 3600.0);
  return r;
}

// One user, `sizes[j]` records in trajectory j, trajectories 100 h apart.
std::vector<RawTrajectory> user_with_sizes(const std::string& user,
                                           const std::vector<int>& sizes) {
  std::vector<RawTrajectory> out;
  double t = 0.0;
  for (int n : sizes) {
    RawTrajectory traj{user, {}};
    for (int k = 0; k < n; ++k) {
      traj.records.push_back(at_hour(user, t, "v" + std::to_string(k)));
      t += 1.0;
    }
    t += 100.0;
    out.push_back(std::move(traj));
  }
  return out;
}

TEST(Parse, TimezoneOffsetGivesLocalHour) {
  auto r = parse_checkin_line(
      "u1\tv1\tcat\tCafe\t35.6\t139.7\t540\tTue Apr 03 02:00:00 +0000 2012");
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(hour_of_day(r->timestamp), 11);
  EXPECT_EQ(r->user, "u1");
  EXPECT_EQ(r->venue, "v1");
  EXPECT_EQ(r->category, "Cafe");
}

TEST(Parse, NegativeOffsetWrapsToPreviousDay) {
  auto r = parse_checkin_line(
      "u1\tv1\tcat\tCafe\t40.7\t-74.0\t-240\tTue Apr 03 02:00:00 +0000 2012");
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(hour_of_day(r->timestamp), 22);
}

TEST(Parse, UtcTimeFormats) {
  EXPECT_EQ(parse_utc_time("Tue Apr 03 18:00:09 +0000 2012"),
            std::optional<std::int64_t>(1333476009));
  EXPECT_EQ(parse_utc_time("1333476009"),
            std::optional<std::int64_t>(1333476009));
  EXPECT_FALSE(parse_utc_time("yesterday").has_value());
}

TEST(Parse, RejectsMalformedRows) {
  EXPECT_FALSE(parse_checkin_line("u1\tv1\tcat\tCafe\tabc\t139.7\t540\t"
                                  "Tue Apr 03 02:00:00 +0000 2012"));
  EXPECT_FALSE(parse_checkin_line("u1\tv1\tcat\tCafe\t95\t139.7\t540\t"
                                  "Tue Apr 03 02:00:00 +0000 2012"));
  EXPECT_FALSE(parse_checkin_line("u1\tv1\tcat"));
}

TEST(Parse, NonNumericLatIsSkippedAndCounted) {
  fs::path dir = scratch_dir("malformed");
  std::string text;
  for (int i = 0; i < 19; ++i) {
    text += row("u1", "v" + std::to_string(i), "35.6", 540,
                "Tue Apr 03 02:00:00 +0000 2012");
  }
  text += row("u1", "vx", "north", 540, "Tue Apr 03 02:00:00 +0000 2012");
  write_text(dir / "c.tsv", text);
  ParsedCheckins parsed = parse_checkins(dir / "c.tsv");
  EXPECT_EQ(parsed.records.size(), 19u);
  EXPECT_EQ(parsed.stats.rows, 20u);
  EXPECT_EQ(parsed.stats.malformed, 1u);
}

TEST(Parse, TooManyMalformedRowsIsFormatError) {
  fs::path dir = scratch_dir("mostly_bad");
  std::string text;
  for (int i = 0; i < 8; ++i) {
    text += row("u1", "v", "35.6", 0, "Tue Apr 03 02:00:00 +0000 2012");
  }
  text += "garbage\ngarbage\n";
  write_text(dir / "c.tsv", text);
  EXPECT_THROW(parse_checkins(dir / "c.tsv"), FormatError);
}

TEST(Parse, EmptyFileGivesEmptyStream) {
  fs::path dir = scratch_dir("empty");
  write_text(dir / "c.tsv", "");
  ParsedCheckins parsed = parse_checkins(dir / "c.tsv");
  EXPECT_TRUE(parsed.records.empty());
  EXPECT_EQ(parsed.stats.rows, 0u);
}

TEST(Parse, MissingFileIsIoError) {
  EXPECT_THROW(parse_checkins("/nonexistent/checkins.tsv"), IoError);
}

TEST(Parse, GzipInputMatchesPlain) {
  fs::path dir = scratch_dir("gzip");
  std::string text;
  for (int i = 0; i < 5; ++i) {
    text += row("u" + std::to_string(i), "v", "35.6", 60,
                "Tue Apr 03 0" + std::to_string(i) + ":00:00 +0000 2012");
  }
  write_text(dir / "c.tsv", text);
  gzFile gz = gzopen((dir / "c.tsv.gz").c_str(), "wb");
  ASSERT_NE(gz, nullptr);
  gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
  gzclose(gz);
  auto plain = parse_checkins(dir / "c.tsv").records;
  auto packed = parse_checkins(dir / "c.tsv.gz").records;
  ASSERT_EQ(plain.size(), 5u);
  ASSERT_EQ(packed.size(), 5u);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    EXPECT_EQ(plain[i].user, packed[i].user);
    EXPECT_EQ(plain[i].timestamp, packed[i].timestamp);
  }
}

TEST(Segment, LongGapStartsNewTrajectory) {
  std::vector<CheckinRecord> recs = {at_hour("u", 0), at_hour("u", 10),
                                     at_hour("u", 100)};
  auto trajs = segment_trajectories(recs, 72.0);
  ASSERT_EQ(trajs.size(), 2u);
  EXPECT_EQ(trajs[0].records.size(), 2u);
  EXPECT_EQ(trajs[1].records.size(), 1u);
  EXPECT_EQ(trajs[1].records[0].timestamp, 100 * 3600);
}

TEST(Segment, SingleRecordIsSingleton) {
  std::vector<CheckinRecord> recs = {at_hour("u", 5)};
  auto trajs = segment_trajectories(recs, 72.0);
  ASSERT_EQ(trajs.size(), 1u);
  EXPECT_EQ(trajs[0].records.size(), 1u);
}

TEST(Segment, ShortGapsStayTogether) {
  std::vector<CheckinRecord> recs;
  for (int h = 0; h < 500; h += 71) recs.push_back(at_hour("u", h));
  EXPECT_EQ(segment_trajectories(recs, 72.0).size(), 1u);
}

TEST(Segment, GapEqualToWindowDoesNotSplit) {
  std::vector<CheckinRecord> recs = {at_hour("u", 0), at_hour("u", 72)};
  EXPECT_EQ(segment_trajectories(recs, 72.0).size(), 1u);
}

TEST(Segment, RejectsBadInput) {
  std::vector<CheckinRecord> recs = {at_hour("u", 5), at_hour("u", 1)};
  EXPECT_THROW(segment_trajectories(recs, 72.0), ContractError);
  std::vector<CheckinRecord> mixed = {at_hour("u", 0), at_hour("w", 1)};
  EXPECT_THROW(segment_trajectories(mixed, 72.0), ContractError);
  EXPECT_THROW(segment_trajectories(recs, 0.0), ConfigError);
}

TEST(Segment, IsAPartition) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CheckinRecord> recs;
    double t = 0;
    for (int k = 0; k < 60; ++k) {
      t += static_cast<double>(rng.between(0, 150));
      recs.push_back(at_hour("u", t, "v" + std::to_string(k)));
    }
    const double gap = 1.0 + static_cast<double>(rng.below(100));
    auto trajs = segment_trajectories(recs, gap);
    std::vector<std::string> joined;
    for (const auto& tr : trajs) {
      ASSERT_FALSE(tr.records.empty());
      for (std::size_t k = 1; k < tr.records.size(); ++k) {
        EXPECT_LE(tr.records[k].timestamp - tr.records[k - 1].timestamp,
                  static_cast<std::int64_t>(gap * 3600));
      }
      for (const auto& r : tr.records) joined.push_back(r.venue);
    }
    std::vector<std::string> original;
    for (const auto& r : recs) original.push_back(r.venue);
    EXPECT_EQ(joined, original);
  }
}

TEST(Filter, KeepsQualifyingUser) {
  auto result = filter_dataset(user_with_sizes("a", {6, 6, 6, 6, 6}));
  EXPECT_EQ(result.trajectories.size(), 5u);
  EXPECT_EQ(result.dropped_users, 0u);
}

TEST(Filter, ShortTrajectoryCascadesToUser) {
  auto input = user_with_sizes("a", {6, 6, 6, 6, 3});
  auto keep = user_with_sizes("b", {5, 5, 5, 5, 5});
  input.insert(input.end(), keep.begin(), keep.end());
  auto result = filter_dataset(input);
  ASSERT_EQ(result.trajectories.size(), 5u);
  for (const auto& t : result.trajectories) EXPECT_EQ(t.user, "b");
  EXPECT_EQ(result.dropped_users, 1u);
  EXPECT_EQ(result.dropped_trajectories, 5u);
  EXPECT_LE(result.passes, 2u);
}

TEST(Filter, EmptyResultThrows) {
  EXPECT_THROW(filter_dataset(user_with_sizes("a", {6, 6, 3})),
               EmptyDatasetError);
}

TEST(Filter, PostconditionsHoldExactly) {
  Rng rng(3);
  std::vector<RawTrajectory> input;
  for (int u = 0; u < 30; ++u) {
    std::vector<int> sizes;
    const auto n = rng.between(3, 9);
    for (int j = 0; j < n; ++j) {
      sizes.push_back(static_cast<int>(rng.between(1, 9)));
    }
    auto part = user_with_sizes("u" + std::to_string(u), sizes);
    input.insert(input.end(), part.begin(), part.end());
  }
  FilterConfig config{5, 5};
  auto result = filter_dataset(input, config);
  std::map<std::string, int> per_user;
  for (const auto& t : result.trajectories) {
    EXPECT_GE(t.records.size(), 5u);
    ++per_user[t.user];
  }
  for (const auto& [user, n] : per_user) EXPECT_GE(n, 5) << user;
}

TEST(Vocab, LexicographicIndices) {
  RawTrajectory t{"u", {at_hour("u", 0, "B"), at_hour("u", 1, "A")}};
  Dataset d = build_vocab({t});
  EXPECT_EQ(d.locations.index("A"), 0u);
  EXPECT_EQ(d.locations.index("B"), 1u);
  EXPECT_EQ(d.trajectories[0].records[0].location, 1u);
  Dataset again = build_vocab({t});
  EXPECT_EQ(d.locations, again.locations);
  EXPECT_EQ(d.users, again.users);
}

TEST(Vocab, RoundTripAndLookupErrors) {
  Vocab v = Vocab::from_unsorted({"z", "a", "m", "a"});
  ASSERT_EQ(v.size(), 3u);
  for (std::uint32_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.index(v.raw(i)), i);
  }
  EXPECT_THROW(v.index("q"), LookupError);
  EXPECT_FALSE(v.find("q").has_value());
  EXPECT_THROW(Vocab({"a", "a"}), FormatError);
}

TEST(Split, Counts) {
  using C = std::array<std::size_t, 3>;
  EXPECT_EQ(split_counts(10, {}), (C{7, 1, 2}));
  EXPECT_EQ(split_counts(5, {}), (C{3, 1, 1}));
  EXPECT_EQ(split_counts(7, {1.0, 0.0, 0.0}), (C{7, 0, 0}));
  for (std::size_t n = 5; n < 60; ++n) {
    C c = split_counts(n, {});
    EXPECT_EQ(c[0] + c[1] + c[2], n);
    EXPECT_GE(c[1], 1u);
    EXPECT_GE(c[2], 1u);
  }
}

TEST(Split, RejectsRatiosNotSummingToOne) {
  EXPECT_THROW(validate_ratios({0.5, 0.1, 0.1}), ConfigError);
  EXPECT_THROW(validate_ratios({1.2, -0.1, -0.1}), ConfigError);
}

TEST(Split, ChronologicalDisjointExhaustive) {
  std::vector<RawTrajectory> raw;
  for (int u = 0; u < 4; ++u) {
    std::vector<int> sizes(static_cast<std::size_t>(5 + 3 * u), 5);
    auto part = user_with_sizes("u" + std::to_string(u), sizes);
    raw.insert(raw.end(), part.begin(), part.end());
  }
  Dataset d = split_dataset(build_vocab(raw), {});
  EXPECT_EQ(d.count(Split::kTrain) + d.count(Split::kValid) +
                d.count(Split::kTest),
            d.trajectories.size());
  std::map<std::uint32_t, std::vector<Split>> per_user;
  for (const auto& t : d.trajectories) per_user[t.user].push_back(t.split);
  for (const auto& [u, splits] : per_user) {
    EXPECT_TRUE(std::is_sorted(splits.begin(), splits.end())) << u;
    auto expected = split_counts(splits.size(), {});
    EXPECT_EQ(static_cast<std::size_t>(
                  std::count(splits.begin(), splits.end(), Split::kValid)),
              expected[1]);
  }
  Dataset all_train = split_dataset(build_vocab(raw), {1.0, 0.0, 0.0});
  EXPECT_EQ(all_train.count(Split::kTrain), all_train.trajectories.size());
}

TEST(DatasetIo, RoundTrip) {
  SynthConfig config;
  config.n_users = 12;
  config.n_locations = 60;
  config.records_per_user = 80;
  Dataset d = synth_generate(config);
  fs::path dir = scratch_dir("io");
  save_dataset(dir, d, {{"kind", "synthetic"}});
  Dataset back = load_dataset(dir);
  EXPECT_EQ(back.users, d.users);
  EXPECT_EQ(back.locations, d.locations);
  EXPECT_EQ(back.categories, d.categories);
  ASSERT_EQ(back.trajectories.size(), d.trajectories.size());
  for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
    EXPECT_EQ(back.trajectories[i].user, d.trajectories[i].user);
    EXPECT_EQ(back.trajectories[i].ordinal, d.trajectories[i].ordinal);
    EXPECT_EQ(back.trajectories[i].split, d.trajectories[i].split);
    EXPECT_EQ(back.trajectories[i].records, d.trajectories[i].records);
  }
  EXPECT_EQ(fs::file_size(dir / "records.bin"), d.num_records() * kRecordBytes);
  EXPECT_EQ(load_dataset_source(dir).at("kind"), "synthetic");
}

TEST(DatasetIo, TruncatedRecordsRejected) {
  SynthConfig config;
  config.n_users = 6;
  config.n_locations = 40;
  config.records_per_user = 60;
  fs::path dir = scratch_dir("truncated");
  save_dataset(dir, synth_generate(config));
  fs::resize_file(dir / "records.bin", fs::file_size(dir / "records.bin") - 3);
  EXPECT_THROW(load_dataset(dir), FormatError);
  EXPECT_THROW(load_dataset(scratch_dir("missing")), IoError);
}

}  // namespace
}  // namespace mobcausal::data
