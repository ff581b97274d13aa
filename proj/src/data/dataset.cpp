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

#include "mobcausal/data/dataset.hpp"

#include <algorithm>

#include "mobcausal/errors.hpp"

namespace mobcausal::data {

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

Vocab::Vocab(std::vector<std::string> raw) : raw_(std::move(raw)) {
  index_.reserve(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    if (!index_.emplace(raw_[i], static_cast<std::uint32_t>(i)).second) {
      throw FormatError("duplicate vocabulary entry '" + raw_[i] + "'");
    }
  }
}

Vocab Vocab::from_unsorted(std::vector<std::string> raw) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  return Vocab(std::move(raw));
}

const std::string& Vocab::raw(std::uint32_t index) const {
  if (index >= raw_.size()) {
    throw LookupError("vocabulary index " + std::to_string(index) +
                      " out of range for size " + std::to_string(raw_.size()));
  }
  return raw_[index];
}

std::uint32_t Vocab::index(std::string_view raw) const {
  if (auto found = find(raw)) return *found;
  throw LookupError("unknown vocabulary entry '" + std::string(raw) + "'");
}

std::optional<std::uint32_t> Vocab::find(std::string_view raw) const {
  auto it = index_.find(std::string(raw));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::num_records() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.records.size();
  return n;
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(trajectories.begin(), trajectories.end(),
                    [split](const Trajectory& t) { return t.split == split; }));
}

}  // namespace mobcausal::data
