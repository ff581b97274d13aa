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

#include "mobcausal/model/model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "mobcausal/errors.hpp"
#include "mobcausal/logging.hpp"
#include "mobcausal/nn/checkpoint.hpp"
#include "mobcausal/random.hpp"

namespace mobcausal::model {

using nn::Shape;

namespace {

constexpr const char* kConfigFile = "model_config.json";
constexpr std::uint64_t kInitStream = 0x1417;

template <typename T>
T unit_uniform(Rng& rng) {
  T v = static_cast<T>(rng.uniform());
  return v < T(1) ? v : std::nextafter(T(1), T(0));
}

struct ParamSpec {
  std::string name;
  Shape shape;
};

Shape shape_of(std::initializer_list<std::size_t> extents) {
  return Shape(extents);
}

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  const std::size_t in = 2 * c.d;
  const std::size_t h = c.n_hidden;
  return {
      {"emb.user", shape_of({c.n_users, c.d})},
      {"emb.location", shape_of({c.n_locations, c.d})},
      {"emb.hour", shape_of({c.n_hours, c.d})},
      {"f_h.w", shape_of({2 * c.d, c.d})},
      {"f_h.b", shape_of({c.d})},
      {"f_g.w_z", shape_of({in, h})},
      {"f_g.w_r", shape_of({in, h})},
      {"f_g.w_h", shape_of({in, h})},
      {"f_g.u_z", shape_of({h, h})},
      {"f_g.u_r", shape_of({h, h})},
      {"f_g.u_h", shape_of({h, h})},
      {"f_g.b_z", shape_of({h})},
      {"f_g.b_r", shape_of({h})},
      {"f_g.b_h", shape_of({h})},
      {"head.w1", shape_of({c.head_input(), h})},
      {"head.b1", shape_of({h})},
      {"head.w2", shape_of({h, c.n_locations})},
      {"head.b2", shape_of({c.n_locations})},
  };
}

}  // namespace

const char* strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::kI: return "I";
    case Strategy::kII: return "II";
    case Strategy::kIII: return "III";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "I" || name == "1") return Strategy::kI;
  if (name == "II" || name == "2") return Strategy::kII;
  if (name == "III" || name == "3") return Strategy::kIII;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (d == 0 || n_hidden == 0) throw ConfigError("model: d and n_hidden must be positive");
  if (n_users == 0 || n_locations == 0) {
    throw ConfigError("model: vocabulary sizes must be positive");
  }
  if (n_hours != 24) throw ConfigError("model: n_hours must be 24");
}

std::size_t ModelConfig::head_input() const {
  return n_hidden + (link1 ? d : 0) + (link2 ? d : 0);
}

nlohmann::json ModelConfig::to_json() const {
  return {{"d", d},
          {"n_hidden", n_hidden},
          {"n_users", n_users},
          {"n_locations", n_locations},
          {"n_hours", n_hours},
          {"link1", link1},
          {"link2", link2},
          {"strategy", strategy_name(strategy)},
          {"tie_space", tie_space == TieSpace::kLogit ? "logit" : "probability"}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.d = j.at("d").get<std::size_t>();
    c.n_hidden = j.at("n_hidden").get<std::size_t>();
    c.n_users = j.at("n_users").get<std::size_t>();
    c.n_locations = j.at("n_locations").get<std::size_t>();
    c.n_hours = j.at("n_hours").get<std::size_t>();
    c.link1 = j.at("link1").get<bool>();
    c.link2 = j.at("link2").get<bool>();
    auto s = parse_strategy(j.at("strategy").get<std::string>());
    if (!s) throw ConfigError("model config: unknown strategy");
    c.strategy = *s;
    const auto space = j.at("tie_space").get<std::string>();
    if (space == "logit") {
      c.tie_space = TieSpace::kLogit;
    } else if (space == "probability") {
      c.tie_space = TieSpace::kProbability;
    } else {
      throw ConfigError("model config: unknown tie_space " + space);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

template <typename T>
ParameterSet<T> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, {kInitStream}));
  ParameterSet<T> params;
  for (const auto& spec : param_specs(config)) {
    Tensor<T> value = Tensor<T>::zeros(spec.shape);
    auto data = value.mutable_data();
    if (spec.name.rfind("emb.", 0) == 0) {
      for (T& v : data) v = static_cast<T>(0.1 * rng.normal());
    } else if (spec.shape.size() == 2) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
      for (T& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
    }
    params.add(spec.name, std::move(value));
  }
  return params;
}

template <typename T>
void check_parameters(const ModelConfig& config, const ParameterSet<T>& params) {
  const auto specs = param_specs(config);
  if (specs.size() != params.size()) {
    throw ConfigError("model: expected " + std::to_string(specs.size()) +
                      " parameters, found " + std::to_string(params.size()));
  }
  for (const auto& spec : specs) {
    if (!params.contains(spec.name)) {
      throw ConfigError("model: missing parameter " + spec.name);
    }
    const auto& shape = params.at(spec.name).value.shape();
    if (shape != spec.shape) {
      throw ConfigError("model: parameter " + spec.name + " has shape " +
                        nn::shape_string(shape) + ", configuration implies " +
                        nn::shape_string(spec.shape));
    }
  }
}

template <typename T>
CounterfactualBatch<T> make_counterfactual(const SequenceBatch& batch,
                                           std::span<const std::size_t> rows,
                                           std::span<const Tensor<T>> states,
                                           std::span<const Tensor<T>> locations,
                                           Strategy h_strategy,
                                           Strategy l_strategy,
                                           std::uint64_t seed) {
  if (locations.size() < batch.steps ||
      (h_strategy == Strategy::kIII && states.size() < batch.steps)) {
    throw DimensionError("make_counterfactual: missing factual values");
  }
  const std::size_t d = locations.front().cols();
  const std::size_t n = rows.size();
  const std::size_t total = batch.valid_positions();
  if (total < 2) {
    for (Strategy* s : {&h_strategy, &l_strategy}) {
      if (*s == Strategy::kIII) {
        logger().debug("strategy III needs at least two observations; using II");
        *s = Strategy::kII;
      }
    }
  }

  CounterfactualBatch<T> cf;
  cf.h_strategy = h_strategy;
  cf.strategy = l_strategy;
  cf.seed = seed;
  cf.rows.assign(rows.begin(), rows.end());
  std::size_t steps = 0;
  for (std::size_t r : rows) steps = std::max(steps, batch.lengths.at(r));
  cf.h_star.assign(steps, Tensor<T>::zeros({n, d}));
  cf.l_star.assign(steps, Tensor<T>::zeros({n, d}));

  auto batch_sum = [&](std::span<const Tensor<T>> values) {
    std::vector<double> sum(d, 0.0);
    for (std::size_t k = 0; k < batch.steps; ++k) {
      for (std::size_t b = 0; b < batch.size; ++b) {
        if (!batch.valid(k, b)) continue;
        auto e = values[k].row(b);
        for (std::size_t j = 0; j < d; ++j) sum[j] += static_cast<double>(e[j]);
      }
    }
    return sum;
  };
  const std::vector<double> h_sum =
      h_strategy == Strategy::kIII ? batch_sum(states) : std::vector<double>();
  const std::vector<double> l_sum =
      l_strategy == Strategy::kIII ? batch_sum(locations) : std::vector<double>();

  Rng rng(seed);
  auto fill = [&](Strategy strategy, T* out, const std::vector<double>& sum,
                  std::span<const T> own) {
    switch (strategy) {
      case Strategy::kI:
        for (std::size_t j = 0; j < d; ++j) out[j] = unit_uniform<T>(rng);
        break;
      case Strategy::kII:
        break;
      case Strategy::kIII:
        for (std::size_t j = 0; j < d; ++j) {
          out[j] = static_cast<T>((sum[j] - static_cast<double>(own[j])) /
                                  static_cast<double>(total - 1));
        }
        break;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = rows[i];
    for (std::size_t k = 0; k < batch.lengths[b]; ++k) {
      fill(h_strategy, cf.h_star[k].mutable_data().data() + i * d, h_sum,
           h_strategy == Strategy::kIII ? states[k].row(b) : std::span<const T>());
      fill(l_strategy, cf.l_star[k].mutable_data().data() + i * d, l_sum,
           locations[k].row(b));
    }
  }
  return cf;
}

template <typename T>
Model<T>::Model(Tape<T>& tape, ParameterSet<T>& params,
                const ModelConfig& config)
    : tape_(tape), config_(config) {
  config.validate();
  check_parameters(config, params);
  emb_user_ = tape.param(params.at("emb.user"));
  emb_location_ = tape.param(params.at("emb.location"));
  emb_hour_ = tape.param(params.at("emb.hour"));
  fh_w_ = tape.param(params.at("f_h.w"));
  fh_b_ = tape.param(params.at("f_h.b"));
  gru_ = nn::bind_gru(tape, params, "f_g");
  w1_ = tape.param(params.at("head.w1"));
  b1_ = tape.param(params.at("head.b1"));
  w2_ = tape.param(params.at("head.w2"));
  b2_ = tape.param(params.at("head.b2"));
}

template <typename T>
typename Model<T>::Embedded Model<T>::embed(const SequenceBatch& batch) {
  Embedded e;
  e.users = tape_.embedding_rows(emb_user_, batch.users);
  for (std::size_t k = 0; k < batch.steps; ++k) {
    std::span<const std::size_t> locs(batch.locations.data() + k * batch.size,
                                      batch.size);
    std::span<const std::size_t> hours(batch.hours.data() + k * batch.size,
                                       batch.size);
    e.locations.push_back(tape_.embedding_rows(emb_location_, locs));
    e.hours.push_back(tape_.embedding_rows(emb_hour_, hours));
  }
  return e;
}

template <typename T>
Var Model<T>::f_h(Var users, Var hours) {
  return tape_.tanh(
      tape_.add(tape_.matmul(tape_.concat({users, hours}), fh_w_), fh_b_));
}

template <typename T>
std::vector<Var> Model<T>::f_h(Var users, std::span<const Var> hours) {
  std::vector<Var> out;
  out.reserve(hours.size());
  for (Var t : hours) out.push_back(f_h(users, t));
  return out;
}

template <typename T>
Var Model<T>::f_g(std::span<const Var> h_seq, std::span<const Var> l_seq,
                  std::span<const std::size_t> lengths) {
  if (h_seq.size() != l_seq.size()) {
    throw DimensionError("f_g: h and l sequences differ in length");
  }
  const std::size_t rows = lengths.size();
  const std::size_t hidden = config_.n_hidden;
  Var g = tape_.constant(Tensor<T>::zeros({rows, hidden}));
  for (std::size_t k = 0; k < h_seq.size(); ++k) {
    std::size_t active = 0;
    for (std::size_t len : lengths) active += k < len ? 1 : 0;
    if (active == 0) break;
    Var next = nn::gru_cell(tape_, tape_.concat({h_seq[k], l_seq[k]}), g, gru_);
    if (active == rows) {
      g = next;
      continue;
    }
    Tensor<T> keep = Tensor<T>::zeros({rows, hidden});
    Tensor<T> hold = Tensor<T>::zeros({rows, hidden});
    for (std::size_t b = 0; b < rows; ++b) {
      const T m = k < lengths[b] ? T(1) : T(0);
      for (std::size_t j = 0; j < hidden; ++j) {
        keep[b * hidden + j] = m;
        hold[b * hidden + j] = T(1) - m;
      }
    }
    g = tape_.add(tape_.mul(next, tape_.constant(std::move(keep))),
                  tape_.mul(g, tape_.constant(std::move(hold))));
  }
  return g;
}

template <typename T>
Var Model<T>::head(Var h_tau, Var g_tau, Var l_tau) {
  std::vector<Var> parts;
  if (config_.link1) parts.push_back(h_tau);
  parts.push_back(g_tau);
  if (config_.link2) parts.push_back(l_tau);
  Var x = parts.size() == 1 ? parts[0] : tape_.concat(parts);
  if (tape_.value(x).cols() != config_.head_input()) {
    throw ConfigError("head: input width " +
                      std::to_string(tape_.value(x).cols()) +
                      " does not match built weights (" +
                      std::to_string(config_.head_input()) + ")");
  }
  Var hidden = tape_.tanh(tape_.add(tape_.matmul(x, w1_), b1_));
  return tape_.add(tape_.matmul(hidden, w2_), b2_);
}

template <typename T>
Var Model<T>::stack_rows(Var top, Var bottom) {
  const std::size_t cols = tape_.value(top).cols();
  const std::size_t top_rows = tape_.value(top).rows();
  const std::size_t bottom_rows = tape_.value(bottom).rows();
  Var a = tape_.reshape(top, {1, top_rows * cols});
  Var b = tape_.reshape(bottom, {1, bottom_rows * cols});
  return tape_.reshape(tape_.concat({a, b}), {top_rows + bottom_rows, cols});
}

template <typename T>
ForwardOutput<T> Model<T>::forward(const SequenceBatch& batch,
                                   const ForwardOptions& options,
                                   const CounterfactualBatch<T>* replay) {
  ForwardOutput<T> out;
  Embedded e = embed(batch);
  out.h_seq = f_h(e.users, e.hours);
  std::vector<std::size_t> last_hours(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    last_hours[b] = batch.hours[batch.flat(batch.lengths[b] - 1, b)];
  }
  out.h_tau = f_h(e.users, tape_.embedding_rows(emb_hour_, last_hours));
  out.l_tau = tape_.embedding_rows(emb_location_, batch.last_locations());
  out.g_tau = f_g(out.h_seq, e.locations, batch.lengths);

#ifndef MOBCAUSAL_NO_COUNTERFACTUAL
  if (options.mode == Mode::kTrain) {
    out.causal_rows = batch.rows_in(Stratum::kT2);
  }
#endif
  if (out.causal_rows.empty()) {
    out.y_pred = head(out.h_tau, out.g_tau, out.l_tau);
    return out;
  }

  const auto& rows = out.causal_rows;
  Var g_star;
  if (options.identity_intervention) {
    g_star = tape_.gather_rows(out.g_tau, rows);
  } else {
    if (replay != nullptr) {
      if (replay->rows != rows) {
        throw UsageError("forward: replayed counterfactual rows differ");
      }
      out.counterfactual = *replay;
    } else {
      std::vector<Tensor<T>> loc_values;
      for (Var v : e.locations) loc_values.push_back(tape_.value(v));
      out.counterfactual = make_counterfactual<T>(
          batch, rows, {}, loc_values, Strategy::kI, config_.strategy,
          options.counterfactual_seed);
    }
    std::vector<Var> h_star, l_star;
    for (std::size_t k = 0; k < out.counterfactual->h_star.size(); ++k) {
      h_star.push_back(tape_.constant(out.counterfactual->h_star[k]));
      l_star.push_back(tape_.constant(out.counterfactual->l_star[k]));
    }
    std::vector<std::size_t> lengths;
    for (std::size_t r : rows) lengths.push_back(batch.lengths[r]);
    g_star = f_g(h_star, l_star, lengths);
  }
  // Factual and intervened rows share one head evaluation.
  Var h_all = stack_rows(out.h_tau, tape_.gather_rows(out.h_tau, rows));
  Var g_all = stack_rows(out.g_tau, g_star);
  Var l_all = stack_rows(out.l_tau, tape_.gather_rows(out.l_tau, rows));
  Var logits = head(h_all, g_all, l_all);
  std::vector<std::size_t> top(batch.size), bottom(rows.size());
  std::iota(top.begin(), top.end(), 0);
  std::iota(bottom.begin(), bottom.end(), batch.size);
  out.y_pred = tape_.gather_rows(logits, top);
  out.y_causal = tape_.gather_rows(logits, bottom);
  return out;
}

template <typename T>
Tensor<T> tie(const Tensor<T>& y_pred, const Tensor<T>& y_causal) {
  if (y_pred.shape() != y_causal.shape()) {
    throw DimensionError("tie: shapes " + nn::shape_string(y_pred.shape()) +
                         " and " + nn::shape_string(y_causal.shape()));
  }
  Tensor<T> out = y_pred;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y_causal[i];
  return out;
}

template <typename T>
Tensor<T> predict(ParameterSet<T>& params, const ModelConfig& config,
                  const SequenceBatch& batch) {
  Tape<T> tape;
  Model<T> model(tape, params, config);
  return tape.value(model.forward(batch).y_pred);
}

namespace {

const PredictionSample& checked(const PredictionSample& sample,
                                const ModelConfig& config) {
  if (sample.input.empty()) throw ContractError("sample with tau = 0");
  if (sample.user >= config.n_users) {
    throw LookupError("user index " + std::to_string(sample.user) +
                      " out of range for vocabulary of size " +
                      std::to_string(config.n_users));
  }
  return sample;
}

void check_location(std::size_t l, const ModelConfig& config) {
  if (l >= config.n_locations) {
    throw LookupError("location index " + std::to_string(l) +
                      " out of range for vocabulary of size " +
                      std::to_string(config.n_locations));
  }
}

}  // namespace

template <typename T>
Tensor<T> causal_effect(const PredictionSample& sample, std::size_t l_i,
                        std::size_t l_j, ParameterSet<T>& params,
                        const ModelConfig& config) {
  check_location(l_i, config);
  check_location(l_j, config);
  std::vector<PredictionSample> one{checked(sample, config)};
  SequenceBatch batch = make_batch(one);
  Tape<T> tape;
  Model<T> model(tape, params, config);
  ForwardOutput<T> f = model.forward(batch);
  Var table = tape.param(params.at("emb.location"));
  const std::size_t pair[] = {l_i, l_j};
  Var both = tape.embedding_rows(table, pair);
  const std::size_t zero_zero[] = {0, 0};
  Var h2 = tape.gather_rows(f.h_tau, zero_zero);
  Var g2 = tape.gather_rows(f.g_tau, zero_zero);
  Tensor<T> y = tape.value(model.head(h2, g2, both));
  const std::size_t n = y.cols();
  Tensor<T> out = Tensor<T>::zeros({n});
  for (std::size_t c = 0; c < n; ++c) out[c] = y.at(0, c) - y.at(1, c);
  return out;
}

template <typename T>
CausalEffectReport<T> decompose_effects(const PredictionSample& sample,
                                        ParameterSet<T>& params,
                                        const ModelConfig& config,
                                        Strategy strategy, std::uint64_t seed,
                                        bool identity_intervention) {
  std::vector<PredictionSample> one{checked(sample, config)};
  SequenceBatch batch = make_batch(one);
  Tape<T> tape;
  Model<T> model(tape, params, config);
  auto e = model.embed(batch);
  std::vector<Var> h_seq = model.f_h(e.users, e.hours);
  Var h = h_seq.back();
  Var l = e.locations.back();
  Var g = model.f_g(h_seq, e.locations, batch.lengths);

  Var h_star = h, l_star = l, g_star = g;
  if (!identity_intervention) {
    std::vector<Tensor<T>> h_values, loc_values;
    for (Var v : h_seq) h_values.push_back(tape.value(v));
    for (Var v : e.locations) loc_values.push_back(tape.value(v));
    const std::size_t row0[] = {0};
    auto cf = make_counterfactual<T>(batch, row0, h_values, loc_values,
                                     strategy, strategy, seed);
    std::vector<Var> hs, ls;
    for (std::size_t k = 0; k < cf.h_star.size(); ++k) {
      hs.push_back(tape.constant(cf.h_star[k]));
      ls.push_back(tape.constant(cf.l_star[k]));
    }
    h_star = hs.back();
    l_star = ls.back();
    g_star = model.f_g(hs, ls, batch.lengths);
  }
  // Rows: Y(h,g,l), Y(h,g*,l), Y(h*,g*,l*).
  auto stack3 = [&](Var a, Var b, Var c) {
    const std::size_t n = tape.value(a).size();
    Var flat = tape.concat({tape.reshape(a, {1, n}), tape.reshape(b, {1, n}),
                            tape.reshape(c, {1, n})});
    return tape.reshape(flat, {3, n});
  };
  Tensor<T> y = tape.value(model.head(stack3(h, h, h_star), stack3(g, g_star, g_star),
                                      stack3(l, l, l_star)));
  const std::size_t n = y.cols();
  CausalEffectReport<T> report{Tensor<T>::zeros({n}), Tensor<T>::zeros({n}),
                               Tensor<T>::zeros({n}), Tensor<T>::zeros({n}),
                               Tensor<T>::zeros({n}), Tensor<T>::zeros({n})};
  for (std::size_t c = 0; c < n; ++c) {
    report.y_factual[c] = y.at(0, c);
    report.y_mediator[c] = y.at(1, c);
    report.y_reference[c] = y.at(2, c);
    report.te[c] = y.at(0, c) - y.at(2, c);
    report.nde[c] = y.at(1, c) - y.at(2, c);
    report.tie[c] = report.te[c] - report.nde[c];
  }
  return report;
}

void save_model(const std::filesystem::path& dir, const ModelConfig& config,
                const ParameterSet<float>& params) {
  check_parameters(config, params);
  nn::save_parameters(dir, params);
  std::ofstream out(dir / kConfigFile);
  if (!out) throw IoError("cannot write " + (dir / kConfigFile).string());
  out << config.to_json().dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / kConfigFile);
  if (!in) throw IoError("cannot read " + (dir / kConfigFile).string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / kConfigFile).string() + ": " + e.what());
  }
  LoadedModel loaded{ModelConfig::from_json(j), nn::read_parameters(dir)};
  try {
    check_parameters(loaded.config, loaded.params);
  } catch (const ConfigError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return loaded;
}

#define MOBCAUSAL_INSTANTIATE(T)                                              \
  template ParameterSet<T> init_parameters<T>(const ModelConfig&,             \
                                              std::uint64_t);                 \
  template void check_parameters<T>(const ModelConfig&,                       \
                                    const ParameterSet<T>&);                  \
  template CounterfactualBatch<T> make_counterfactual<T>(                     \
      const SequenceBatch&, std::span<const std::size_t>,                     \
      std::span<const Tensor<T>>, std::span<const Tensor<T>>, Strategy,       \
      Strategy, std::uint64_t);                                               \
  template class Model<T>;                                                    \
  template Tensor<T> tie<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> predict<T>(ParameterSet<T>&, const ModelConfig&,         \
                                const SequenceBatch&);                        \
  template Tensor<T> causal_effect<T>(const PredictionSample&, std::size_t,   \
                                      std::size_t, ParameterSet<T>&,          \
                                      const ModelConfig&);                    \
  template CausalEffectReport<T> decompose_effects<T>(                        \
      const PredictionSample&, ParameterSet<T>&, const ModelConfig&,          \
      Strategy, std::uint64_t, bool);

MOBCAUSAL_INSTANTIATE(float)
MOBCAUSAL_INSTANTIATE(double)

#undef MOBCAUSAL_INSTANTIATE

}  // namespace mobcausal::model
