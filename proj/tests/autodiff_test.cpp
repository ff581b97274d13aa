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

#include <vector>

#include "gradcheck.hpp"
#include "gtest/gtest.h"
#include "mobcausal/nn/gru.hpp"
#include "mobcausal/nn/tape.hpp"

namespace mobcausal::nn {
namespace {

using testing::check_gradients;
using testing::random_tensor;

constexpr double kTolerance = 1e-4;

class OpGradientTest : public ::testing::TestWithParam<int> {
 protected:
  Rng rng_{static_cast<std::uint64_t>(GetParam()) * 7919 + 1};
  std::size_t extent(std::size_t lo, std::size_t hi) {
    return static_cast<std::size_t>(rng_.between(static_cast<std::int64_t>(lo),
                                                 static_cast<std::int64_t>(hi)));
  }
};

TEST_P(OpGradientTest, Matmul) {
  const std::size_t m = extent(1, 4), k = extent(1, 5), n = extent(1, 4);
  ParameterSet<double> params;
  params.add("a", random_tensor(rng_, {m, k}));
  params.add("b", random_tensor(rng_, {k, n}));
  auto w = random_tensor(rng_, {m, n});
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        Var c = t.matmul(t.param(p.at("a")), t.param(p.at("b")));
        return t.sum(t.mul(c, t.constant(w)));
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

TEST_P(OpGradientTest, ElementwiseAndBroadcast) {
  const std::size_t m = extent(1, 4), n = extent(2, 5);
  ParameterSet<double> params;
  params.add("a", random_tensor(rng_, {m, n}));
  params.add("b", random_tensor(rng_, {m, n}));
  params.add("bias", random_tensor(rng_, {n}));
  params.add("s", random_tensor(rng_, {}));
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        Var a = t.param(p.at("a"));
        Var b = t.param(p.at("b"));
        Var x = t.add(t.mul(t.tanh(a), t.sigmoid(b)), t.param(p.at("bias")));
        Var y = t.sub(t.mul(x, t.param(p.at("s"))), t.affine(b, -0.5, 2.0));
        return t.mean(t.mul(y, y));
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

TEST_P(OpGradientTest, ConcatSliceReshape) {
  const std::size_t m = extent(1, 3), n1 = extent(1, 4), n2 = extent(1, 4);
  ParameterSet<double> params;
  params.add("a", random_tensor(rng_, {m, n1}));
  params.add("b", random_tensor(rng_, {m, n2}));
  auto w = random_tensor(rng_, {m * (n1 + n2 - 1)});
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        Var c = t.concat({t.param(p.at("a")), t.param(p.at("b"))});
        Var s = t.slice(t.tanh(c), 1, n1 + n2);
        Var flat = t.reshape(s, Shape{m * (n1 + n2 - 1)});
        return t.sum(t.mul(flat, t.constant(w)));
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

TEST_P(OpGradientTest, EmbeddingGatherSoftmaxCrossEntropy) {
  const std::size_t vocab = extent(3, 6), d = extent(2, 4), rows = extent(2, 5);
  ParameterSet<double> params;
  params.add("table", random_tensor(rng_, {vocab, d}));
  params.add("proj", random_tensor(rng_, {d, vocab}));
  std::vector<std::size_t> idx(rows), targets(rows);
  for (auto& i : idx) i = rng_.below(vocab);
  for (auto& i : targets) i = rng_.below(vocab);
  const std::vector<std::size_t> picked = {rows - 1, 0};
  const std::vector<std::size_t> picked_targets = {targets[rows - 1], targets[0]};
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        Var e = t.embedding_rows(t.param(p.at("table")), idx);
        Var logits = t.matmul(e, t.param(p.at("proj")));
        Var ce = t.softmax_cross_entropy(logits, targets);
        Var probs = t.softmax(t.gather_rows(logits, picked));
        Var ce2 = t.softmax_cross_entropy(probs, picked_targets);
        return t.add(ce, ce2);
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

TEST_P(OpGradientTest, GruCell) {
  const std::size_t input = extent(1, 4), hidden = extent(1, 4),
                    batch = extent(1, 3);
  ParameterSet<double> params;
  add_gru_parameters(params, "gru", input, hidden);
  for (auto& p : params) p.value = random_tensor(rng_, p.value.shape(), 0.8);
  params.add("h0", random_tensor(rng_, {batch, hidden}));
  auto x = random_tensor(rng_, {batch, input});
  auto w = random_tensor(rng_, {batch, hidden});
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        GruWeights gw = bind_gru(t, p, "gru");
        Var h1 = gru_cell(t, t.constant(x), t.param(p.at("h0")), gw);
        Var h2 = gru_cell(t, t.constant(x), h1, gw);
        return t.sum(t.mul(h2, t.constant(w)));
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

// GRU over a short sequence followed by a tanh MLP head and cross-entropy.
TEST_P(OpGradientTest, CompositeGruMlp) {
  const std::size_t d = extent(2, 4), hidden = extent(2, 4), classes = 5,
                    steps = 3, batch = 2;
  ParameterSet<double> params;
  params.add("emb", random_tensor(rng_, {classes, d}, 0.5));
  add_gru_parameters(params, "gru", d, hidden);
  params.add("w1", Tensor<double>(Shape{hidden + d, 4}));
  params.add("b1", Tensor<double>(Shape{4}));
  params.add("w2", Tensor<double>(Shape{4, classes}));
  params.add("b2", Tensor<double>(Shape{classes}));
  for (auto& p : params) p.value = random_tensor(rng_, p.value.shape(), 0.7);
  std::vector<std::vector<std::size_t>> seq(steps, std::vector<std::size_t>(batch));
  for (auto& s : seq) {
    for (auto& v : s) v = rng_.below(classes);
  }
  const std::vector<std::size_t> targets = {1, 4};
  auto result = check_gradients(
      [&](Tape<double>& t, ParameterSet<double>& p) {
        GruWeights gw = bind_gru(t, p, "gru");
        Var table = t.param(p.at("emb"));
        Var h = t.constant(Tensor<double>(Shape{batch, hidden}));
        Var last;
        for (const auto& step : seq) {
          last = t.embedding_rows(table, step);
          h = gru_cell(t, last, h, gw);
        }
        Var z = t.tanh(t.add(t.matmul(t.concat({h, last}), t.param(p.at("w1"))),
                             t.param(p.at("b1"))));
        Var logits = t.add(t.matmul(z, t.param(p.at("w2"))), t.param(p.at("b2")));
        return t.softmax_cross_entropy(logits, targets);
      },
      params);
  EXPECT_LT(result.max_rel_error, kTolerance) << result.worst;
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradientTest, ::testing::Range(0, 5));

TEST(DeterminismTest, SameInputsGiveBitIdenticalForwardAndGradients) {
  auto run = [] {
    Rng rng(42);
    ParameterSet<float> params;
    add_gru_parameters(params, "gru", 3, 4);
    for (auto& p : params) {
      for (float& v : p.value.mutable_data()) v = static_cast<float>(rng.uniform(-1, 1));
    }
    Tape<float> tape;
    GruWeights w = bind_gru(tape, params, "gru");
    Var x = tape.constant(Tensor<float>::matrix(2, 3, {1, 2, 3, -1, 0.5f, 0}));
    Var h = tape.constant(Tensor<float>(Shape{2, 4}));
    Var out = gru_cell(tape, x, gru_cell(tape, x, h, w), w);
    tape.backward(tape.sum(tape.mul(out, out)));
    std::vector<Tensor<float>> snapshot = {tape.value(out)};
    for (const auto& p : params) snapshot.push_back(p.grad);
    return snapshot;
  };
  EXPECT_EQ(run(), run());
}

TEST(DeterminismTest, ReplayWithoutParameterChangeIsIdentical) {
  ParameterSet<double> params;
  Rng rng(3);
  params.add("w", random_tensor(rng, {3, 3}));
  auto forward = [&] {
    Tape<double> tape;
    Var w = tape.param(params.at("w"));
    return tape.value(tape.tanh(tape.matmul(w, w)));
  };
  EXPECT_EQ(forward(), forward());
}

TEST(CrossEntropyPropertyTest, NonNegativeAndSoftmaxNormalized) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 2 + rng.below(10);
    auto logits = random_tensor(rng, {classes}, 20.0);
    Tape<double> tape;
    Var x = tape.constant(logits);
    const std::size_t target[] = {rng.below(classes)};
    EXPECT_GE(tape.value(tape.softmax_cross_entropy(x, target)).item(), 0.0);
    double total = 0;
    for (double p : tape.value(tape.softmax(x)).data()) total += p;
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace mobcausal::nn
