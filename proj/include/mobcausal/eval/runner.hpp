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

#ifndef MOBCAUSAL_EVAL_RUNNER_HPP_
#define MOBCAUSAL_EVAL_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobcausal/data/dataset.hpp"
#include "mobcausal/eval/metrics.hpp"
#include "mobcausal/stratify/stratify.hpp"
#include "mobcausal/train/train.hpp"

namespace mobcausal::eval {

inline const std::vector<std::uint32_t> kDefaultThresholds = {0,  5,  10,
                                                              15, 20, 25};

// One trained-and-evaluated cell of a sweep or ablation.
struct RunCell {
  std::string label;
  train::TrainConfig config;
  std::size_t best_epoch = 0;
  MetricsReport report;  // test split
};

// Wide CSV: one row per cell. Columns: label, threshold, link1, link2,
// best_epoch, n_t1, n_t2, then recall/mrr/ndcg@k overall and recall@k on T1
// and T2.
void write_cells_csv(std::span<const RunCell> cells,
                     const std::filesystem::path& path);
nlohmann::json cells_to_json(std::span<const RunCell> cells);

struct SweepResult {
  std::vector<RunCell> cells;  // grid order
};

struct AblationResult {
  // full, w/o link1, w/o link2, w/o both
  std::vector<RunCell> cells;
  const RunCell& cell(bool link1, bool link2) const;
};

struct RunnerOptions {
  std::vector<std::size_t> ks = kDefaultKs;
  // Each cell writes its training log and checkpoint to out_dir/<label>/.
  std::optional<std::filesystem::path> out_dir;
};

// Trains and evaluates once per threshold with base.seed shared across
// cells. Strata in each report follow that cell's threshold.
SweepResult sweep_threshold(const data::Dataset& dataset,
                            const train::TrainConfig& base,
                            std::span<const std::uint32_t> grid =
                                kDefaultThresholds,
                            const RunnerOptions& options = {});

// Four runs differing only in the link flags.
AblationResult run_ablation(const data::Dataset& dataset,
                            const stratify::AnchorIndex& anchors,
                            const train::TrainConfig& base,
                            const RunnerOptions& options = {});

}  // namespace mobcausal::eval

#endif  // MOBCAUSAL_EVAL_RUNNER_HPP_
