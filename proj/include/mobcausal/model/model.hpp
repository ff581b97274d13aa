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

#ifndef MOBCAUSAL_MODEL_MODEL_HPP_
#define MOBCAUSAL_MODEL_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mobcausal/model/batch.hpp"
#include "mobcausal/nn/gru.hpp"
#include "mobcausal/nn/parameters.hpp"
#include "mobcausal/nn/tape.hpp"
#include "mobcausal/nn/tensor.hpp"

namespace mobcausal::model {

using nn::ParameterSet;
using nn::Tape;
using nn::Tensor;
using nn::Var;

// Counterfactual value constructions: uniform noise, zeros, and the mean of
// the other location embeddings in the batch.
enum class Strategy : std::uint8_t { kI = 1, kII = 2, kIII = 3 };

const char* strategy_name(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view name);

// Where the indirect effect is taken: raw logits, or softmax outputs.
enum class TieSpace : std::uint8_t { kLogit, kProbability };

struct ModelConfig {
  std::size_t d = 128;
  std::size_t n_hidden = 256;
  std::size_t n_users = 0;
  std::size_t n_locations = 0;
  std::size_t n_hours = 24;
  bool link1 = true;  // h_tau feeds the head
  bool link2 = true;  // l_tau feeds the head
  Strategy strategy = Strategy::kI;
  TieSpace tie_space = TieSpace::kLogit;

  void validate() const;  // throws ConfigError
  std::size_t head_input() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Parameter names:
//   emb.user [U x d], emb.location [L x d], emb.hour [24 x d]
//   f_h.w [2d x d], f_h.b [d]
//   f_g.{w,u,b}_{z,r,h}   GRU, input 2d, hidden n_hidden
//   head.w1 [in x n_hidden], head.b1, head.w2 [n_hidden x L], head.b2
// where in = n_hidden + d * (link1 + link2).
template <typename T>
ParameterSet<T> init_parameters(const ModelConfig& config, std::uint64_t seed);

// Throws ConfigError when `params` does not match the shapes `config` implies.
template <typename T>
void check_parameters(const ModelConfig& config, const ParameterSet<T>& params);

template <typename T>
struct CounterfactualBatch {
  Strategy h_strategy = Strategy::kI;
  Strategy strategy = Strategy::kI;  // for l*
  std::uint64_t seed = 0;
  std::vector<std::size_t> rows;  // batch rows the values belong to
  std::vector<Tensor<T>> h_star;  // per step, [rows x d]; zero when padded
  std::vector<Tensor<T>> l_star;
};

// Builds h* and l* for `rows` of `batch`. `states` and `locations` are the
// factual h and location embeddings, one [size x d] tensor per step; `states`
// is only read when h_strategy is III. Strategy III with a single valid
// position in the batch falls back to Strategy II. Training uses
// h_strategy = I.
template <typename T>
CounterfactualBatch<T> make_counterfactual(const SequenceBatch& batch,
                                           std::span<const std::size_t> rows,
                                           std::span<const Tensor<T>> states,
                                           std::span<const Tensor<T>> locations,
                                           Strategy h_strategy,
                                           Strategy l_strategy,
                                           std::uint64_t seed);

enum class Mode { kTrain, kEval };

struct ForwardOptions {
  Mode mode = Mode::kEval;
  std::uint64_t counterfactual_seed = 0;
  // Use g* = g for the counterfactual rows.
  bool identity_intervention = false;
};

template <typename T>
struct ForwardOutput {
  std::vector<Var> h_seq;  // per step, [size x d]
  Var h_tau, g_tau, l_tau;
  Var y_pred;  // [size x L]
  std::optional<Var> y_causal;  // [causal_rows x L]
  std::vector<std::size_t> causal_rows;
  std::optional<CounterfactualBatch<T>> counterfactual;
};

// Binds a parameter set to a tape and records the model's computations.
template <typename T>
class Model {
 public:
  Model(Tape<T>& tape, ParameterSet<T>& params, const ModelConfig& config);

  struct Embedded {
    Var users;                   // [size x d]
    std::vector<Var> locations;  // per step, [size x d]
    std::vector<Var> hours;
  };

  Embedded embed(const SequenceBatch& batch);
  // tanh(W (u ⊕ t) + b) per step.
  Var f_h(Var users, Var hours);
  std::vector<Var> f_h(Var users, std::span<const Var> hours);
  // Masked GRU over (h_k ⊕ l_k) from a zero state; rows stop updating after
  // their own length.
  Var f_g(std::span<const Var> h_seq, std::span<const Var> l_seq,
          std::span<const std::size_t> lengths);
  // Logits from (h_tau ⊕ g_tau ⊕ l_tau), dropping ablated inputs.
  Var head(Var h_tau, Var g_tau, Var l_tau);

  // `replay` reuses an earlier draw instead of sampling a new one.
  ForwardOutput<T> forward(const SequenceBatch& batch,
                           const ForwardOptions& options = {},
                           const CounterfactualBatch<T>* replay = nullptr);

  Tape<T>& tape() { return tape_; }
  const ModelConfig& config() const { return config_; }

 private:
  Var stack_rows(Var top, Var bottom);

  Tape<T>& tape_;
  const ModelConfig& config_;
  Var emb_user_, emb_location_, emb_hour_;
  Var fh_w_, fh_b_;
  nn::GruWeights gru_;
  Var w1_, b1_, w2_, b2_;
};

// y_pred - y_causal.
template <typename T>
Tensor<T> tie(const Tensor<T>& y_pred, const Tensor<T>& y_causal);

// Eval-mode logits for every row of `batch`.
template <typename T>
Tensor<T> predict(ParameterSet<T>& params, const ModelConfig& config,
                  const SequenceBatch& batch);

// Logit difference when the head sees location l_i instead of l_j as the
// final location, holding h and g at their factual values.
template <typename T>
Tensor<T> causal_effect(const PredictionSample& sample, std::size_t l_i,
                        std::size_t l_j, ParameterSet<T>& params,
                        const ModelConfig& config);

template <typename T>
struct CausalEffectReport {
  Tensor<T> te;
  Tensor<T> nde;
  Tensor<T> tie;
  Tensor<T> y_factual;    // Y(h, g, l)
  Tensor<T> y_mediator;   // Y(h, g*, l)
  Tensor<T> y_reference;  // Y(h*, g*, l*)
};

// TE = Y(h,g,l) - Y(h*,g*,l*), NDE = Y(h,g*,l) - Y(h*,g*,l*),
// TIE = TE - NDE, from one counterfactual draw. `strategy` builds both h*
// and l*.
template <typename T>
CausalEffectReport<T> decompose_effects(const PredictionSample& sample,
                                        ParameterSet<T>& params,
                                        const ModelConfig& config,
                                        Strategy strategy, std::uint64_t seed,
                                        bool identity_intervention = false);

// Parameters (float32) plus model_config.json.
void save_model(const std::filesystem::path& dir, const ModelConfig& config,
                const ParameterSet<float>& params);
struct LoadedModel {
  ModelConfig config;
  ParameterSet<float> params;
};
LoadedModel load_model(const std::filesystem::path& dir);

}  // namespace mobcausal::model

#endif  // MOBCAUSAL_MODEL_MODEL_HPP_
