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

#include "mobcausal/data/checkin.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <memory>

#include "mobcausal/errors.hpp"
#include "mobcausal/logging.hpp"

namespace mobcausal::data {
namespace {

constexpr double kMaxMalformedFraction = 0.10;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename N>
std::optional<N> parse_number(std::string_view text) {
  N value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<int> parse_month(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == name) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

// "+0900" -> 540 minutes.
std::optional<int> parse_zone(std::string_view zone) {
  if (zone.size() != 5 || (zone[0] != '+' && zone[0] != '-')) return std::nullopt;
  auto hh = parse_number<int>(zone.substr(1, 2));
  auto mm = parse_number<int>(zone.substr(3, 2));
  if (!hh || !mm) return std::nullopt;
  const int minutes = *hh * 60 + *mm;
  return zone[0] == '-' ? -minutes : minutes;
}

class GzLineReader {
 public:
  explicit GzLineReader(const std::filesystem::path& path)
      : file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) {
      throw IoError("cannot open " + path.string());
    }
  }
  ~GzLineReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzLineReader(const GzLineReader&) = delete;
  GzLineReader& operator=(const GzLineReader&) = delete;

  bool next(std::string& line) {
    line.clear();
    std::array<char, 4096> buf;
    while (gzgets(file_, buf.data(), static_cast<int>(buf.size())) != nullptr) {
      line.append(buf.data());
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
    }
    int err = 0;
    gzerror(file_, &err);
    if (err != Z_OK && err != Z_STREAM_END) {
      throw IoError("read error in compressed input");
    }
    return !line.empty();
  }

 private:
  gzFile file_;
};

}  // namespace

int hour_of_day(std::int64_t timestamp) {
  std::int64_t seconds = timestamp % 86400;
  if (seconds < 0) seconds += 86400;
  return static_cast<int>(seconds / 3600);
}

std::optional<std::int64_t> parse_utc_time(std::string_view text) {
  if (auto epoch = parse_number<std::int64_t>(text)) return epoch;
  // Www Mmm dd hh:mm:ss +zzzz yyyy
  auto parts = split(text, ' ');
  if (parts.size() != 6) return std::nullopt;
  auto month = parse_month(parts[1]);
  auto day = parse_number<int>(parts[2]);
  auto year = parse_number<int>(parts[5]);
  auto zone = parse_zone(parts[4]);
  auto clock = split(parts[3], ':');
  if (!month || !day || !year || !zone || clock.size() != 3) return std::nullopt;
  auto hh = parse_number<int>(clock[0]);
  auto mi = parse_number<int>(clock[1]);
  auto ss = parse_number<int>(clock[2]);
  if (!hh || !mi || !ss || *hh > 23 || *mi > 59 || *ss > 60) return std::nullopt;
  const std::chrono::year_month_day ymd{
      std::chrono::year{*year}, std::chrono::month{static_cast<unsigned>(*month)},
      std::chrono::day{static_cast<unsigned>(*day)}};
  if (!ymd.ok()) return std::nullopt;
  const std::int64_t days =
      std::chrono::sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + *hh * 3600 + *mi * 60 + *ss - std::int64_t{*zone} * 60;
}

std::optional<CheckinRecord> parse_checkin_line(std::string_view line) {
  auto fields = split(line, '\t');
  if (fields.size() != 8) return std::nullopt;
  for (std::size_t i : {0u, 1u}) {
    if (fields[i].empty()) return std::nullopt;
  }
  auto lat = parse_number<double>(fields[4]);
  auto lon = parse_number<double>(fields[5]);
  auto offset = parse_number<int>(fields[6]);
  auto utc = parse_utc_time(fields[7]);
  if (!lat || !lon || !offset || !utc) return std::nullopt;
  if (!std::isfinite(*lat) || !std::isfinite(*lon) || std::abs(*lat) > 90.0 ||
      std::abs(*lon) > 180.0) {
    return std::nullopt;
  }
  CheckinRecord record;
  record.user = std::string(fields[0]);
  record.venue = std::string(fields[1]);
  record.category = std::string(fields[3]);
  record.lat = *lat;
  record.lon = *lon;
  record.timestamp = *utc + std::int64_t{*offset} * 60;
  return record;
}

ParseStats for_each_checkin(const std::filesystem::path& path,
                            const std::function<void(CheckinRecord&&)>& sink) {
  GzLineReader reader(path);
  ParseStats stats;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    ++stats.rows;
    if (auto record = parse_checkin_line(line)) {
      ++stats.parsed;
      sink(std::move(*record));
    } else {
      ++stats.malformed;
      logger().debug("skipping malformed row {}", stats.rows);
    }
  }
  if (stats.rows == 0) {
    logger().warn("{} contains no check-in rows", path.string());
  } else if (static_cast<double>(stats.malformed) >
             kMaxMalformedFraction * static_cast<double>(stats.rows)) {
    throw FormatError(path.string() + ": " + std::to_string(stats.malformed) +
                      " of " + std::to_string(stats.rows) +
                      " rows are malformed");
  } else if (stats.malformed > 0) {
    logger().info("skipped {} malformed rows of {}", stats.malformed, stats.rows);
  }
  return stats;
}

ParsedCheckins parse_checkins(const std::filesystem::path& path) {
  ParsedCheckins out;
  out.stats = for_each_checkin(
      path, [&](CheckinRecord&& r) { out.records.push_back(std::move(r)); });
  return out;
}

}  // namespace mobcausal::data
