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

#include "mobcausal/cli/run_config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "mobcausal/errors.hpp"
#include "mobcausal/eval/metrics.hpp"
#include "mobcausal/eval/runner.hpp"

namespace mobcausal::cli {
namespace {

std::string join(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(' ');
    auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw ConfigError("empty item in " + key);
    out.push_back(parse_number<T>(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError(key + " is empty");
  return out;
}

}  // namespace

const char* source_name(Source source) {
  switch (source) {
    case Source::kDefault: return "default";
    case Source::kFile: return "file";
    case Source::kFlag: return "flag";
  }
  return "?";
}

RunConfig::RunConfig() {
  const data::SynthConfig s;
  const data::PreprocessConfig p;
  const train::TrainConfig t;
  auto def = [this](const std::string& key, std::string value) {
    entries_[key] = {std::move(value), Source::kDefault};
  };
  def("run.seed", std::to_string(t.seed));

  def("data.gap_hours", fmt::format("{}", p.gap_hours));
  def("data.min_records", std::to_string(p.filter.min_records));
  def("data.min_trajectories", std::to_string(p.filter.min_trajectories));

  def("synth.n_users", std::to_string(s.n_users));
  def("synth.n_locations", std::to_string(s.n_locations));
  def("synth.n_anchor_per_user", std::to_string(s.n_anchor_per_user));
  def("synth.records_per_user", std::to_string(s.records_per_user));
  def("synth.anchor_return_prob", fmt::format("{}", s.anchor_return_prob));
  def("synth.transition_sharpness", fmt::format("{}", s.transition_sharpness));
  def("synth.trip_min_records", std::to_string(s.trip_min_records));
  def("synth.trip_max_records", std::to_string(s.trip_max_records));
  def("synth.trip_gap_hours", fmt::format("{}", s.trip_gap_hours));

  def("model.d", std::to_string(t.model.d));
  def("model.n_hidden", std::to_string(t.model.n_hidden));
  def("model.strategy", model::strategy_name(t.model.strategy));
  def("model.link1", "true");
  def("model.link2", "true");
  def("model.tie_space", "logit");

  def("train.epochs", std::to_string(t.epochs));
  def("train.batch", std::to_string(t.batch_size));
  def("train.lr", fmt::format("{}", t.lr));
  def("train.threshold", std::to_string(t.anchor_threshold));
  def("train.patience", std::to_string(t.patience));
  def("train.clip_norm", fmt::format("{}", t.clip_norm));

  def("eval.k", join(eval::kDefaultKs));
  def("eval.grid", join(eval::kDefaultThresholds));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(path.string() + ": key '" + section +
                        "' is outside a [section]");
    }
    for (const auto& [key, value] : body) {
      set(section + "." + key, value.get_value<std::string>(), Source::kFile);
    }
  }
}

void RunConfig::set(const std::string& key, std::string value, Source source) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key " + key);
  it->second = {std::move(value), source};
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key " + key);
  return it->second.value;
}

Source RunConfig::source(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key " + key);
  return it->second.source;
}

std::uint64_t RunConfig::seed() const {
  return parse_number<std::uint64_t>("run.seed", get("run.seed"));
}

data::SynthConfig RunConfig::synth() const {
  auto sz = [this](const char* k) { return parse_number<std::size_t>(k, get(k)); };
  auto dbl = [this](const char* k) { return parse_number<double>(k, get(k)); };
  data::SynthConfig s;
  s.seed = seed();
  s.n_users = sz("synth.n_users");
  s.n_locations = sz("synth.n_locations");
  s.n_anchor_per_user = sz("synth.n_anchor_per_user");
  s.records_per_user = sz("synth.records_per_user");
  s.anchor_return_prob = dbl("synth.anchor_return_prob");
  s.transition_sharpness = dbl("synth.transition_sharpness");
  s.trip_min_records = sz("synth.trip_min_records");
  s.trip_max_records = sz("synth.trip_max_records");
  s.trip_gap_hours = dbl("synth.trip_gap_hours");
  s.validate();
  return s;
}

data::PreprocessConfig RunConfig::preprocess() const {
  data::PreprocessConfig p;
  p.gap_hours = parse_number<double>("data.gap_hours", get("data.gap_hours"));
  if (!(p.gap_hours > 0)) throw ConfigError("data.gap_hours must be positive");
  p.filter.min_records =
      parse_number<std::size_t>("data.min_records", get("data.min_records"));
  p.filter.min_trajectories = parse_number<std::size_t>(
      "data.min_trajectories", get("data.min_trajectories"));
  return p;
}

train::TrainConfig RunConfig::train() const {
  auto sz = [this](const char* k) { return parse_number<std::size_t>(k, get(k)); };
  train::TrainConfig t;
  t.seed = seed();
  t.epochs = sz("train.epochs");
  t.batch_size = sz("train.batch");
  t.lr = parse_number<double>("train.lr", get("train.lr"));
  t.anchor_threshold =
      parse_number<std::uint32_t>("train.threshold", get("train.threshold"));
  t.patience = sz("train.patience");
  t.clip_norm = parse_number<double>("train.clip_norm", get("train.clip_norm"));
  t.model.d = sz("model.d");
  t.model.n_hidden = sz("model.n_hidden");
  auto strategy = model::parse_strategy(get("model.strategy"));
  if (!strategy) {
    throw ConfigError("model.strategy must be I, II or III, got '" +
                      get("model.strategy") + "'");
  }
  t.model.strategy = *strategy;
  t.model.link1 = parse_bool("model.link1", get("model.link1"));
  t.model.link2 = parse_bool("model.link2", get("model.link2"));
  const auto& space = get("model.tie_space");
  if (space == "logit") {
    t.model.tie_space = model::TieSpace::kLogit;
  } else if (space == "probability") {
    t.model.tie_space = model::TieSpace::kProbability;
  } else {
    throw ConfigError("model.tie_space must be logit or probability");
  }
  t.validate();
  return t;
}

std::vector<std::size_t> RunConfig::ks() const {
  auto ks = parse_list<std::size_t>("eval.k", get("eval.k"));
  for (auto k : ks)
    if (k == 0) throw ConfigError("eval.k entries must be positive");
  return ks;
}

std::vector<std::uint32_t> RunConfig::grid() const {
  return parse_list<std::uint32_t>("eval.grid", get("eval.grid"));
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, entry] : entries_)
    j[key] = {{"value", entry.value}, {"source", source_name(entry.source)}};
  return j;
}

}  // namespace mobcausal::cli
