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

#ifndef MOBCAUSAL_NN_TAPE_HPP_
#define MOBCAUSAL_NN_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "mobcausal/nn/parameters.hpp"
#include "mobcausal/nn/tensor.hpp"

namespace mobcausal::nn {

// Handle to a node on a Tape. Only meaningful for the tape that issued it.
struct Var {
  std::uint32_t id = 0;
};

// Records primitive ops in execution order and runs reverse-mode
// differentiation over them. Nodes are appended only, so every node's inputs
// precede it and a single reverse sweep visits each node once.
//
// Only nodes that depend on a parameter carry gradients; constants and
// anything computed purely from constants are treated as detached.
//
// Broadcasting is limited to two cases for binary ops: a scalar right operand,
// and a rank-1 right operand whose length equals the last extent of a rank-2
// left operand (bias rows). Everything else must match exactly.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value);
  // Leaf bound to `param`; backward() accumulates into param.grad.
  Var param(Parameter<T>& param);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  // Gradient of the last backward() root with respect to `v`; zeros if `v`
  // was not on any path to the root.
  Tensor<T> grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse.
  // Throws UsageError unless `loss` holds exactly one element.
  void backward(Var loss);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // alpha * a + beta, elementwise.
  Var affine(Var a, T alpha, T beta);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }
  // Columns [begin, end) of the last axis.
  Var slice(Var a, std::size_t begin, std::size_t end);
  Var reshape(Var a, Shape shape);
  Var sum(Var a);
  Var mean(Var a);

  Var embedding(Var table, std::size_t index);
  // One row of `table` per index, stacked into [indices.size() x d].
  Var embedding_rows(Var table, std::span<const std::size_t> indices);
  Var gather_rows(Var a, std::span<const std::size_t> rows);

  // Softmax over the last axis.
  Var softmax(Var a);
  // Sum over rows of -log softmax(logits)[target]. `logits` is [C] with one
  // target, or [B x C] with B targets.
  Var softmax_cross_entropy(Var logits, std::span<const std::size_t> targets);

 private:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Tensor<T> value;
    std::vector<T> grad;
    bool needs_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Var push(Tensor<T> value, bool needs_grad, BackwardFn backward);
  bool any_needs_grad(std::initializer_list<Var> inputs) const;
  // Gradient buffer of `v`, allocated on first use; empty if `v` is detached.
  std::span<T> grad_buffer(Var v);
  std::span<const T> out_grad(std::size_t id) const {
    return nodes_[id].grad;
  }
  Var binary(Var a, Var b, int kind);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace mobcausal::nn

#endif  // MOBCAUSAL_NN_TAPE_HPP_
