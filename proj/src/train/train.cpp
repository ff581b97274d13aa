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

#include "mobcausal/train/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mobcausal/errors.hpp"
#include "mobcausal/eval/evaluate.hpp"
#include "mobcausal/logging.hpp"
#include "mobcausal/nn/adam.hpp"
#include "mobcausal/random.hpp"

namespace mobcausal::train {

using model::SequenceBatch;
using nn::Tape;
using nn::Var;
using stratify::Stratum;

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("train: lr must be finite and non-negative");
  }
  if (patience == 0) throw ConfigError("train: patience must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"seed", seed},
          {"anchor_threshold", anchor_threshold},
          {"patience", patience},
          {"clip_norm", clip_norm},
          {"model", model.to_json()}};
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& other) {
  total += other.total;
  ce_anchor += other.ce_anchor;
  ce_nonanchor += other.ce_nonanchor;
  n_anchor += other.n_anchor;
  n_nonanchor += other.n_nonanchor;
  return *this;
}

template <typename T>
LossTerms multi_task_loss(Tape<T>& tape, const model::ForwardOutput<T>& out,
                          const SequenceBatch& batch, model::TieSpace space) {
  const auto t1 = batch.rows_in(Stratum::kT1);
  const auto t2 = batch.rows_in(Stratum::kT2);
  if (!t2.empty() && (!out.y_causal || out.causal_rows != t2)) {
    throw ContractError("multi_task_loss: T2 rows without y_causal");
  }
  LossTerms terms;
  std::optional<Var> total;
  if (!t1.empty()) {
    std::vector<std::size_t> targets;
    for (auto r : t1) targets.push_back(batch.targets[r]);
    Var logits = t1.size() == batch.size ? out.y_pred
                                         : tape.gather_rows(out.y_pred, t1);
    Var ce = tape.softmax_cross_entropy(logits, targets);
    terms.breakdown.ce_anchor = static_cast<double>(tape.value(ce).item());
    terms.breakdown.n_anchor = t1.size();
    total = ce;
  }
  if (!t2.empty()) {
    std::vector<std::size_t> targets;
    for (auto r : t2) targets.push_back(batch.targets[r]);
    Var pred = tape.gather_rows(out.y_pred, t2);
    Var effect = space == model::TieSpace::kLogit
                     ? tape.sub(pred, *out.y_causal)
                     : tape.sub(tape.softmax(pred), tape.softmax(*out.y_causal));
    Var ce = tape.softmax_cross_entropy(effect, targets);
    terms.breakdown.ce_nonanchor = static_cast<double>(tape.value(ce).item());
    terms.breakdown.n_nonanchor = t2.size();
    total = total ? tape.add(*total, ce) : ce;
  }
  if (!total) throw ContractError("multi_task_loss: empty batch");
  terms.total = *total;
  terms.breakdown.total = static_cast<double>(tape.value(*total).item());
  return terms;
}

template LossTerms multi_task_loss<float>(Tape<float>&,
                                          const model::ForwardOutput<float>&,
                                          const SequenceBatch&, model::TieSpace);
template LossTerms multi_task_loss<double>(Tape<double>&,
                                           const model::ForwardOutput<double>&,
                                           const SequenceBatch&,
                                           model::TieSpace);

Batcher::Batcher(std::span<const PredictionSample> samples,
                 std::size_t batch_size, std::uint64_t seed, bool bucket)
    : samples_(samples), batch_size_(batch_size), seed_(seed), bucket_(bucket) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
}

std::vector<std::vector<std::size_t>> Batcher::epoch(std::size_t epoch) const {
  Rng rng(derive_seed(seed_, {kShuffleStream, epoch}));
  std::vector<std::size_t> order(samples_.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  if (bucket_) {
    const std::size_t chunk = batch_size_ * 8;
    for (std::size_t begin = 0; begin < order.size(); begin += chunk) {
      auto first = order.begin() + static_cast<std::ptrdiff_t>(begin);
      auto last = order.begin() +
                  static_cast<std::ptrdiff_t>(std::min(order.size(), begin + chunk));
      std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
        return samples_[a].tau() < samples_[b].tau();
      });
    }
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size_) {
    const std::size_t end = std::min(order.size(), begin + batch_size_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (bucket_ && !batches.empty()) {
    const bool partial = batches.back().size() < batch_size_;
    const std::size_t full = batches.size() - (partial ? 1 : 0);
    std::span<std::vector<std::size_t>> head(batches.data(), full);
    rng.shuffle(head);
  }
  return batches;
}

double Batcher::padding_fraction(std::size_t e) const {
  std::size_t padded = 0;
  std::size_t total = 0;
  for (const auto& batch : epoch(e)) {
    std::size_t longest = 0;
    for (auto i : batch) longest = std::max(longest, samples_[i].tau());
    total += longest * batch.size();
    for (auto i : batch) padded += longest - samples_[i].tau();
  }
  return total == 0 ? 0.0
                    : static_cast<double>(padded) / static_cast<double>(total);
}

nlohmann::json EpochLog::to_json() const {
  const double n = std::max<std::size_t>(1, loss.samples());
  return {{"epoch", epoch},
          {"loss", loss.total / n},
          {"loss_sum", loss.total},
          {"ce_anchor", loss.ce_anchor / n},
          {"ce_nonanchor", loss.ce_nonanchor / n},
          {"n_anchor", loss.n_anchor},
          {"n_nonanchor", loss.n_nonanchor},
          {"valid_recall@5", valid_recall},
          {"valid_mrr@5", valid_mrr},
          {"valid_ndcg@5", valid_ndcg},
          {"improved", improved},
          {"wall_seconds", wall_seconds}};
}

TrainResult train(const data::Dataset& dataset,
                  const stratify::AnchorIndex& anchors,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  TrainResult result;
  result.model = config.model;
  result.model.n_users = dataset.users.size();
  result.model.n_locations = dataset.locations.size();
  result.model.validate();

  const auto train_samples =
      stratify::make_samples(dataset, anchors, data::Split::kTrain);
  const auto valid_samples =
      stratify::make_samples(dataset, anchors, data::Split::kValid);
  if (train_samples.empty() || valid_samples.empty()) {
    throw EmptyDatasetError("training needs train and valid samples");
  }

  ParameterSet<float> params = model::init_parameters<float>(
      result.model, derive_seed(config.seed, {kInitStream}));
  nn::AdamState<float> adam;
  adam.options.lr = config.lr;
  Batcher batcher(train_samples, config.batch_size, config.seed);

  std::ofstream log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    log.open(*options.out_dir / "log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot write log.jsonl");
  }

  result.params = params;
  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;
    const auto batches = batcher.epoch(epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      SequenceBatch batch = model::make_batch(train_samples, batches[b]);
      params.zero_grad();
      Tape<float> tape;
      model::Model<float> net(tape, params, result.model);
      model::ForwardOptions fwd;
      fwd.mode = model::Mode::kTrain;
      fwd.counterfactual_seed =
          derive_seed(config.seed, {kCounterfactualStream, epoch, b});
      auto out = net.forward(batch, fwd);
      LossTerms loss = multi_task_loss(tape, out, batch, result.model.tie_space);
      if (!std::isfinite(loss.breakdown.total)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(b) + " (" +
                              std::to_string(loss.breakdown.total) + ")");
      }
      tape.backward(loss.total);
      if (config.clip_norm > 0.0) {
        const double norm = params.grad_norm();
        if (!std::isfinite(norm)) {
          throw DivergenceError("non-finite gradient norm at epoch " +
                                std::to_string(epoch));
        }
        if (norm > config.clip_norm) params.scale_grad(config.clip_norm / norm);
      }
      nn::adam_step(params, adam);
      entry.loss += loss.breakdown;
    }

    auto ranked = eval::rank_samples(params, result.model, valid_samples);
    std::vector<std::size_t> ranks;
    for (const auto& r : ranked) ranks.push_back(r.rank);
    const eval::Metrics m = eval::metrics_at_k(ranks, 5);
    entry.valid_recall = m.recall;
    entry.valid_mrr = m.mrr;
    entry.valid_ndcg = m.ndcg;
    entry.improved = m.recall > best;
    if (entry.improved) {
      best = m.recall;
      since_best = 0;
      result.params.assign_values(params);
      result.best_epoch = epoch;
      result.best_valid_recall = m.recall;
      if (options.out_dir) {
        model::save_model(*options.out_dir / "checkpoint", result.model, params);
      }
    } else {
      ++since_best;
    }
    entry.wall_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    logger().info("epoch {} loss {:.4f} valid recall@5 {:.4f}{}", epoch,
                  entry.loss.total / std::max<std::size_t>(1, entry.loss.samples()),
                  m.recall, entry.improved ? " *" : "");
    if (log.is_open()) log << entry.to_json().dump() << '\n' << std::flush;
    result.history.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if (since_best >= config.patience) break;
  }
  return result;
}

}  // namespace mobcausal::train
