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

#include "mobcausal/eval/runner.hpp"

#include <cmath>
#include <fstream>

#include "mobcausal/errors.hpp"
#include "mobcausal/eval/evaluate.hpp"
#include "mobcausal/logging.hpp"

namespace mobcausal::eval {
namespace {

RunCell run_cell(const data::Dataset& dataset,
                 const stratify::AnchorIndex& anchors,
                 const train::TrainConfig& config, std::string label,
                 const RunnerOptions& options) {
  train::TrainOptions topts;
  if (options.out_dir) topts.out_dir = *options.out_dir / label;
  auto result = train::train(dataset, anchors, config, topts);
  RunCell cell;
  cell.label = std::move(label);
  cell.config = config;
  cell.best_epoch = result.best_epoch;
  cell.report = evaluate(result.params, result.model, dataset,
                         data::Split::kTest, anchors, options.ks);
  if (topts.out_dir) {
    cell.report.write_csv(*topts.out_dir / "metrics.csv");
    std::ofstream(*topts.out_dir / "metrics.json")
        << cell.report.to_json().dump(2) << '\n';
  }
  logger().info("{}: test recall@{} = {:.4f}", cell.label,
                options.ks.back(), cell.report.recall(options.ks.back()));
  return cell;
}

double recall_or_nan(const ScopeMetrics& scope, std::size_t k) {
  auto it = scope.at.find(k);
  return it == scope.at.end() ? std::nan("") : it->second.recall;
}

}  // namespace

void write_cells_csv(std::span<const RunCell> cells,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (cells.empty()) return;
  const auto& ks = cells.front().report.ks;
  out << "label,threshold,link1,link2,best_epoch,n_t1,n_t2";
  for (auto k : ks) out << ",recall@" << k << ",mrr@" << k << ",ndcg@" << k;
  for (auto k : ks) out << ",t1_recall@" << k << ",t2_recall@" << k;
  out << '\n';
  out.precision(10);
  for (const auto& c : cells) {
    out << c.label << ',' << c.config.anchor_threshold << ','
        << c.config.model.link1 << ',' << c.config.model.link2 << ','
        << c.best_epoch << ',' << c.report.t1.count << ','
        << c.report.t2.count;
    for (auto k : ks) {
      const auto& m = c.report.overall.at.at(k);
      out << ',' << m.recall << ',' << m.mrr << ',' << m.ndcg;
    }
    for (auto k : ks)
      out << ',' << recall_or_nan(c.report.t1, k) << ','
          << recall_or_nan(c.report.t2, k);
    out << '\n';
  }
}

nlohmann::json cells_to_json(std::span<const RunCell> cells) {
  auto arr = nlohmann::json::array();
  for (const auto& c : cells)
    arr.push_back({{"label", c.label},
                   {"config", c.config.to_json()},
                   {"best_epoch", c.best_epoch},
                   {"report", c.report.to_json()}});
  return arr;
}

const RunCell& AblationResult::cell(bool link1, bool link2) const {
  for (const auto& c : cells)
    if (c.config.model.link1 == link1 && c.config.model.link2 == link2)
      return c;
  throw UsageError("no ablation cell for that link combination");
}

SweepResult sweep_threshold(const data::Dataset& dataset,
                            const train::TrainConfig& base,
                            std::span<const std::uint32_t> grid,
                            const RunnerOptions& options) {
  if (grid.empty()) throw ConfigError("threshold grid is empty");
  SweepResult result;
  for (auto threshold : grid) {
    auto config = base;
    config.anchor_threshold = threshold;
    auto anchors = stratify::build_anchor_index(dataset, threshold);
    result.cells.push_back(run_cell(dataset, anchors, config,
                                    "threshold_" + std::to_string(threshold),
                                    options));
  }
  return result;
}

AblationResult run_ablation(const data::Dataset& dataset,
                            const stratify::AnchorIndex& anchors,
                            const train::TrainConfig& base,
                            const RunnerOptions& options) {
  struct Variant {
    const char* label;
    bool link1, link2;
  };
  static constexpr Variant kVariants[] = {{"full", true, true},
                                          {"no_link1", false, true},
                                          {"no_link2", true, false},
                                          {"no_links", false, false}};
  AblationResult result;
  for (const auto& v : kVariants) {
    auto config = base;
    config.anchor_threshold = anchors.threshold();
    config.model.link1 = v.link1;
    config.model.link2 = v.link2;
    result.cells.push_back(run_cell(dataset, anchors, config, v.label, options));
  }
  return result;
}

}  // namespace mobcausal::eval
