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

#ifndef MOBCAUSAL_EVAL_EVALUATE_HPP_
#define MOBCAUSAL_EVAL_EVALUATE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mobcausal/data/dataset.hpp"
#include "mobcausal/eval/metrics.hpp"
#include "mobcausal/model/model.hpp"
#include "mobcausal/stratify/stratify.hpp"

namespace mobcausal::eval {

// Receives eval-mode logits for each sample, in sample order.
using LogitSink =
    std::function<void(std::size_t sample, std::span<const float> logits)>;

inline constexpr std::size_t kEvalBatch = 256;

// Eval-mode ranks of every sample's target.
std::vector<RankedSample> rank_samples(model::ParameterSet<float>& params,
                                       const model::ModelConfig& config,
                                       std::span<const stratify::PredictionSample> samples,
                                       const LogitSink& sink = {});

MetricsReport evaluate(model::ParameterSet<float>& params,
                       const model::ModelConfig& config,
                       const data::Dataset& dataset, data::Split split,
                       const stratify::AnchorIndex& anchors,
                       const std::vector<std::size_t>& ks = kDefaultKs,
                       const LogitSink& sink = {});

// Throws CompatibilityError when the model was built for a different
// vocabulary than `dataset`.
void check_compatible(const model::ModelConfig& config,
                      const data::Dataset& dataset);

// Writes logits.f32 (row-major float32, samples x locations) and
// logits_index.csv (row,trajectory,user,target,stratum,category).
class LogitDump {
 public:
  LogitDump(const std::filesystem::path& dir,
            std::span<const stratify::PredictionSample> samples);
  LogitSink sink();

 private:
  std::filesystem::path dir_;
  std::span<const stratify::PredictionSample> samples_;
};

}  // namespace mobcausal::eval

#endif  // MOBCAUSAL_EVAL_EVALUATE_HPP_
