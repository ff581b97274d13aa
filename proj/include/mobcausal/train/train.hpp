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

#ifndef MOBCAUSAL_TRAIN_TRAIN_HPP_
#define MOBCAUSAL_TRAIN_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mobcausal/data/dataset.hpp"
#include "mobcausal/model/model.hpp"
#include "mobcausal/stratify/stratify.hpp"

namespace mobcausal::train {

using model::ModelConfig;
using model::ParameterSet;
using stratify::PredictionSample;

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  std::uint32_t anchor_threshold = 10;
  std::size_t patience = 5;
  double clip_norm = 5.0;  // 0 disables clipping
  // Model dimensions, ablation flags and strategy; vocabulary sizes are
  // filled in from the dataset.
  ModelConfig model;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
};

struct LossBreakdown {
  double total = 0.0;
  double ce_anchor = 0.0;
  double ce_nonanchor = 0.0;
  std::size_t n_anchor = 0;
  std::size_t n_nonanchor = 0;

  LossBreakdown& operator+=(const LossBreakdown& other);
  std::size_t samples() const { return n_anchor + n_nonanchor; }
};

struct LossTerms {
  nn::Var total;
  LossBreakdown breakdown;
};

// Sum of CE(y_pred_i, y_i) over T1 rows plus CE(y_pred_i - y_causal_i, y_i)
// over T2 rows. Throws ContractError when T2 rows lack y_causal.
template <typename T>
LossTerms multi_task_loss(nn::Tape<T>& tape, const model::ForwardOutput<T>& out,
                          const model::SequenceBatch& batch,
                          model::TieSpace space = model::TieSpace::kLogit);

// Epoch streams of sample indices: shuffled with an epoch-derived seed,
// grouped into length-sorted chunks of 8 batches, cut into batches, and the
// full batches shuffled again. A short final batch stays last.
class Batcher {
 public:
  Batcher(std::span<const PredictionSample> samples, std::size_t batch_size,
          std::uint64_t seed, bool bucket = true);
  std::vector<std::vector<std::size_t>> epoch(std::size_t epoch) const;
  // Fraction of padded positions over one epoch.
  double padding_fraction(std::size_t epoch) const;

 private:
  std::span<const PredictionSample> samples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool bucket_;
};

struct EpochLog {
  std::size_t epoch = 0;
  LossBreakdown loss;  // sums over the epoch
  double valid_recall = 0.0;
  double valid_mrr = 0.0;
  double valid_ndcg = 0.0;
  double wall_seconds = 0.0;
  bool improved = false;

  // Losses reported per sample.
  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelConfig model;
  ParameterSet<float> params;  // best on validation
  std::vector<EpochLog> history;
  std::size_t best_epoch = 0;
  double best_valid_recall = 0.0;
};

struct TrainOptions {
  // When set: log.jsonl (one line per epoch) and checkpoint/ (best model).
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

// Seed streams derived from TrainConfig::seed.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;
inline constexpr std::uint64_t kCounterfactualStream = 3;

// Throws DivergenceError on a non-finite loss.
TrainResult train(const data::Dataset& dataset,
                  const stratify::AnchorIndex& anchors,
                  const TrainConfig& config, const TrainOptions& options = {});

}  // namespace mobcausal::train

#endif  // MOBCAUSAL_TRAIN_TRAIN_HPP_
