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

#include "mobcausal/eval/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <memory>

#include "mobcausal/errors.hpp"

namespace mobcausal::eval {

std::vector<RankedSample> rank_samples(
    model::ParameterSet<float>& params, const model::ModelConfig& config,
    std::span<const stratify::PredictionSample> samples, const LogitSink& sink) {
  std::vector<RankedSample> ranked(samples.size());
  std::vector<std::size_t> order;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
    const std::size_t end = std::min(samples.size(), begin + kEvalBatch);
    order.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) order[i - begin] = i;
    model::SequenceBatch batch = model::make_batch(samples, order);
    nn::Tensor<float> logits = model::predict(params, config, batch);
    for (std::size_t b = 0; b < batch.size; ++b) {
      const auto& s = samples[order[b]];
      auto row = logits.row(b);
      ranked[order[b]] = {rank_of_target(row, s.target), s.stratum,
                          s.target_category};
      if (sink) sink(order[b], row);
    }
  }
  return ranked;
}

void check_compatible(const model::ModelConfig& config,
                      const data::Dataset& dataset) {
  if (config.n_users != dataset.users.size() ||
      config.n_locations != dataset.locations.size()) {
    throw CompatibilityError(
        "model vocabulary (" + std::to_string(config.n_users) + " users, " +
        std::to_string(config.n_locations) + " locations) does not match dataset (" +
        std::to_string(dataset.users.size()) + " users, " +
        std::to_string(dataset.locations.size()) + " locations)");
  }
}

MetricsReport evaluate(model::ParameterSet<float>& params,
                       const model::ModelConfig& config,
                       const data::Dataset& dataset, data::Split split,
                       const stratify::AnchorIndex& anchors,
                       const std::vector<std::size_t>& ks,
                       const LogitSink& sink) {
  check_compatible(config, dataset);
  auto samples = stratify::make_samples(dataset, anchors, split);
  if (samples.empty()) {
    throw EmptyDatasetError(std::string("no samples in split ") +
                            data::split_name(split));
  }
  auto ranked = rank_samples(params, config, samples, sink);
  return build_report(ranked, ks, dataset.categories);
}

LogitDump::LogitDump(const std::filesystem::path& dir,
                     std::span<const stratify::PredictionSample> samples)
    : dir_(dir), samples_(samples) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "logits_index.csv");
  if (!index) throw IoError("cannot write " + (dir / "logits_index.csv").string());
  index << "row,trajectory,user,target,stratum,category\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    index << i << ',' << s.trajectory << ',' << s.user << ',' << s.target << ','
          << stratify::stratum_name(s.stratum) << ','
          << (s.target_category == data::kNoCategory
                  ? std::string()
                  : std::to_string(s.target_category))
          << '\n';
  }
  std::ofstream(dir / "logits.f32", std::ios::binary | std::ios::trunc);
}

LogitSink LogitDump::sink() {
  auto out = std::make_shared<std::ofstream>(dir_ / "logits.f32",
                                             std::ios::binary | std::ios::trunc);
  if (!*out) throw IoError("cannot write " + (dir_ / "logits.f32").string());
  auto next = std::make_shared<std::size_t>(0);
  return [out, next](std::size_t sample, std::span<const float> logits) {
    if (sample != (*next)++) {
      throw ContractError("logit dump expects samples in order");
    }
    out->write(reinterpret_cast<const char*>(logits.data()),
               static_cast<std::streamsize>(logits.size() * sizeof(float)));
    out->flush();
  };
}

}  // namespace mobcausal::eval
