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

#ifndef MOBCAUSAL_CLI_RUN_CONFIG_HPP_
#define MOBCAUSAL_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobcausal/data/preprocess.hpp"
#include "mobcausal/data/synth.hpp"
#include "mobcausal/train/train.hpp"

namespace mobcausal::cli {

enum class Source : std::uint8_t { kDefault, kFile, kFlag };
const char* source_name(Source source);

// Every tunable value of a run as "section.key" -> text, with the place the
// value came from. Flags override the config file, which overrides defaults.
//
// Config file syntax (INI):
//   [train]
//   lr = 0.005
//   threshold = 5
//   [model]
//   strategy = II
class RunConfig {
 public:
  struct Entry {
    std::string value;
    Source source = Source::kDefault;
  };

  RunConfig();

  // Throws ConfigError on syntax errors and unknown keys.
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, std::string value, Source source);

  const std::string& get(const std::string& key) const;
  Source source(const std::string& key) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Typed views; throw ConfigError for values that do not parse or fail
  // the corresponding validate().
  std::uint64_t seed() const;
  data::SynthConfig synth() const;
  data::PreprocessConfig preprocess() const;
  train::TrainConfig train() const;
  std::vector<std::size_t> ks() const;
  std::vector<std::uint32_t> grid() const;

  // {"section.key": {"value": ..., "source": ...}, ...}
  nlohmann::json to_json() const;

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace mobcausal::cli

#endif  // MOBCAUSAL_CLI_RUN_CONFIG_HPP_
