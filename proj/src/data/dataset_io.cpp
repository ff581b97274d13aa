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

#include "mobcausal/data/dataset_io.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "mobcausal/errors.hpp"

namespace mobcausal::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename U>
void put_le(std::string& out, U value) {
  using Bits = std::make_unsigned_t<U>;
  const auto bits = static_cast<Bits>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_le(const char* p) {
  using Bits = std::make_unsigned_t<U>;
  Bits bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<Bits>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return static_cast<U>(bits);
}

void write_vocab(const fs::path& path, const Vocab& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << vocab.entries()[i] << '\n';
  }
}

Vocab read_vocab(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos ||
        line.substr(0, tab) != std::to_string(raw.size())) {
      throw FormatError(path.string() + ": expected index " +
                        std::to_string(raw.size()));
    }
    raw.push_back(line.substr(tab + 1));
  }
  return Vocab(std::move(raw));
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot read " + (dir / "manifest.json").string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed dataset manifest: " + std::string(e.what()));
  }
}

}  // namespace

void save_dataset(const fs::path& dir, const Dataset& dataset,
                  const json& source) {
  fs::create_directories(dir);
  std::string blob;
  blob.reserve(dataset.num_records() * kRecordBytes);
  json trajectories = json::array();
  std::size_t offset = 0;
  for (const auto& t : dataset.trajectories) {
    for (const auto& r : t.records) {
      put_le<std::uint32_t>(blob, r.user);
      put_le<std::uint32_t>(blob, r.location);
      put_le<std::uint8_t>(blob, r.hour);
      put_le<std::int64_t>(blob, r.ts);
      put_le<std::uint32_t>(blob, r.category);
    }
    trajectories.push_back({{"user", t.user},
                            {"ordinal", t.ordinal},
                            {"offset", offset},
                            {"count", t.records.size()},
                            {"split", split_name(t.split)}});
    offset += t.records.size();
  }
  {
    std::ofstream out(dir / "records.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "records.bin").string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  write_vocab(dir / "users.tsv", dataset.users);
  write_vocab(dir / "locations.tsv", dataset.locations);
  write_vocab(dir / "categories.tsv", dataset.categories);
  json manifest = {
      {"format", "mobcausal-dataset"},
      {"version", 1},
      {"record_bytes", kRecordBytes},
      {"num_records", offset},
      {"ratios", {dataset.ratios.train, dataset.ratios.valid, dataset.ratios.test}},
      {"source", source},
      {"trajectories", trajectories}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("dataset directory " + dir.string() + " does not exist");
  }
  const json manifest = read_manifest(dir);
  Dataset dataset;
  dataset.users = read_vocab(dir / "users.tsv");
  dataset.locations = read_vocab(dir / "locations.tsv");
  dataset.categories = read_vocab(dir / "categories.tsv");

  std::ifstream in(dir / "records.bin", std::ios::binary);
  if (!in) throw IoError("cannot read " + (dir / "records.bin").string());
  const std::string blob((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  try {
    const auto num_records = manifest.at("num_records").get<std::size_t>();
    if (blob.size() != num_records * kRecordBytes) {
      throw FormatError("records.bin holds " + std::to_string(blob.size()) +
                        " bytes, manifest expects " +
                        std::to_string(num_records * kRecordBytes));
    }
    const auto ratios = manifest.at("ratios").get<std::vector<double>>();
    if (ratios.size() != 3) throw FormatError("manifest ratios must have 3 entries");
    dataset.ratios = SplitRatios{ratios[0], ratios[1], ratios[2]};
    for (const auto& entry : manifest.at("trajectories")) {
      Trajectory t;
      t.user = entry.at("user").get<std::uint32_t>();
      t.ordinal = entry.at("ordinal").get<std::uint32_t>();
      const auto split = parse_split(entry.at("split").get<std::string>());
      if (!split) throw FormatError("unknown split in manifest");
      t.split = *split;
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      if (offset + count > num_records || count == 0) {
        throw FormatError("trajectory extent outside records.bin");
      }
      if (t.user >= dataset.users.size()) {
        throw FormatError("trajectory user index out of range");
      }
      for (std::size_t i = offset; i < offset + count; ++i) {
        const char* p = blob.data() + i * kRecordBytes;
        Record r;
        r.user = get_le<std::uint32_t>(p);
        r.location = get_le<std::uint32_t>(p + 4);
        r.hour = get_le<std::uint8_t>(p + 8);
        r.ts = get_le<std::int64_t>(p + 9);
        r.category = get_le<std::uint32_t>(p + 17);
        if (r.user != t.user || r.location >= dataset.locations.size() ||
            r.hour >= kHoursPerDay ||
            (r.category != kNoCategory && r.category >= dataset.categories.size())) {
          throw FormatError("record " + std::to_string(i) +
                            " has out-of-range fields");
        }
        if (!t.records.empty() && r.ts < t.records.back().ts) {
          throw FormatError("record " + std::to_string(i) + " is out of order");
        }
        t.records.push_back(r);
      }
      dataset.trajectories.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed dataset manifest: " + std::string(e.what()));
  }
  return dataset;
}

json load_dataset_source(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  return manifest.value("source", json::object());
}

}  // namespace mobcausal::data
