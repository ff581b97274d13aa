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

#ifndef MOBCAUSAL_DATA_CHECKIN_HPP_
#define MOBCAUSAL_DATA_CHECKIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobcausal::data {

// One raw check-in. `timestamp` is the UTC instant shifted by the row's
// timezone offset, so that hour_of_day(timestamp) is the local hour.
struct CheckinRecord {
  std::string user;
  std::string venue;
  std::string category;
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t timestamp = 0;
};

struct ParseStats {
  std::size_t rows = 0;       // non-empty lines seen
  std::size_t parsed = 0;
  std::size_t malformed = 0;  // skipped
};

// Local hour-of-day (0..23) of a shifted timestamp.
int hour_of_day(std::int64_t timestamp);

// Parses the UTC time field of the public Foursquare release, e.g.
// "Tue Apr 03 18:00:09 +0000 2012". Also accepts plain epoch seconds.
std::optional<std::int64_t> parse_utc_time(std::string_view text);

// Parses one tab-separated row:
//   user, venue, category id, category name, lat, lon, tz offset (minutes),
//   UTC time.
// Returns nullopt for rows that do not follow that layout.
std::optional<CheckinRecord> parse_checkin_line(std::string_view line);

// Streams every valid row of a (optionally gzip-compressed) TSV file into
// `sink`. Malformed rows are skipped and counted. Throws IoError if the file
// cannot be opened and FormatError if more than 10% of rows are malformed.
ParseStats for_each_checkin(const std::filesystem::path& path,
                            const std::function<void(CheckinRecord&&)>& sink);

struct ParsedCheckins {
  std::vector<CheckinRecord> records;
  ParseStats stats;
};

ParsedCheckins parse_checkins(const std::filesystem::path& path);

}  // namespace mobcausal::data

#endif  // MOBCAUSAL_DATA_CHECKIN_HPP_
