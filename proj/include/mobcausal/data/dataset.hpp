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

#ifndef MOBCAUSAL_DATA_DATASET_HPP_
#define MOBCAUSAL_DATA_DATASET_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mobcausal::data {

inline constexpr std::uint32_t kNoCategory =
    std::numeric_limits<std::uint32_t>::max();
inline constexpr int kHoursPerDay = 24;

// Indexed check-in: user, location and local hour of day.
struct Record {
  std::uint32_t user = 0;
  std::uint32_t location = 0;
  std::uint8_t hour = 0;
  std::int64_t ts = 0;
  std::uint32_t category = kNoCategory;

  friend bool operator==(const Record&, const Record&) = default;
};

enum class Split : std::uint8_t { kTrain = 0, kValid = 1, kTest = 2 };

const char* split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

// The j-th trajectory of a user. Records are ordered by ts.
struct Trajectory {
  std::uint32_t user = 0;
  std::uint32_t ordinal = 0;
  Split split = Split::kTrain;
  std::vector<Record> records;
};

// Dense 0-based index over raw string ids.
class Vocab {
 public:
  Vocab() = default;
  // Indices follow the order of `raw`, which must not contain duplicates.
  explicit Vocab(std::vector<std::string> raw);
  // Sorted, deduplicated vocabulary: lexicographic raw order gives index order.
  static Vocab from_unsorted(std::vector<std::string> raw);

  std::size_t size() const { return raw_.size(); }
  const std::string& raw(std::uint32_t index) const;
  std::uint32_t index(std::string_view raw) const;  // throws LookupError
  std::optional<std::uint32_t> find(std::string_view raw) const;
  const std::vector<std::string>& entries() const { return raw_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.raw_ == b.raw_;
  }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct SplitRatios {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;
};

struct Dataset {
  std::vector<Trajectory> trajectories;  // sorted by (user, ordinal)
  Vocab users;
  Vocab locations;
  Vocab categories;
  SplitRatios ratios;

  std::size_t num_records() const;
  std::size_t count(Split split) const;
};

}  // namespace mobcausal::data

#endif  // MOBCAUSAL_DATA_DATASET_HPP_
