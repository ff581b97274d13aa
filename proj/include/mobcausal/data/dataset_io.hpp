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

#ifndef MOBCAUSAL_DATA_DATASET_IO_HPP_
#define MOBCAUSAL_DATA_DATASET_IO_HPP_

#include <filesystem>

#include "json.hpp"
#include "mobcausal/data/dataset.hpp"

namespace mobcausal::data {

// On-disk layout of a dataset directory:
//   records.bin     packed little-endian records, 21 bytes each:
//                   user u32, location u32, hour u8, ts i64, category u32
//   users.tsv, locations.tsv, categories.tsv
//                   "<index>\t<raw id>" per line, index order
//   manifest.json   split ratios, trajectory table (user, ordinal, offset,
//                   count, split) and free-form provenance under "source"
inline constexpr std::size_t kRecordBytes = 21;

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const nlohmann::json& source = nlohmann::json::object());

// Throws IoError for missing files and FormatError for inconsistent content
// (length mismatches, out-of-range indices, unsorted trajectories).
Dataset load_dataset(const std::filesystem::path& dir);

// The "source" object stored by save_dataset.
nlohmann::json load_dataset_source(const std::filesystem::path& dir);

}  // namespace mobcausal::data

#endif  // MOBCAUSAL_DATA_DATASET_IO_HPP_
