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

#include "mobcausal/nn/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace mobcausal::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

enum BinaryKind { kAdd = 0, kSub = 1, kMul = 2 };

enum class Broadcast { kSame, kBias, kScalar };

Broadcast broadcast_mode(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Broadcast::kSame;
  if (b.empty()) return Broadcast::kScalar;
  if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) return Broadcast::kBias;
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a) + " and " + shape_string(b));
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var Tape<T>::push(Tensor<T> value, bool needs_grad, BackwardFn backward) {
#ifndef NDEBUG
  // Leaves are pushed with a null backward and needs_grad decided by caller;
  // every op result must stay finite when its inputs are.
  if (backward && !value.all_finite()) {
    throw UsageError("non-finite value produced by a tape op");
  }
#endif
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
bool Tape<T>::any_needs_grad(std::initializer_list<Var> inputs) const {
  for (Var v : inputs) {
    if (nodes_.at(v.id).needs_grad) return true;
  }
  return false;
}

template <typename T>
std::span<T> Tape<T>::grad_buffer(Var v) {
  Node& node = nodes_[v.id];
  if (!node.needs_grad) return {};
  if (node.grad.empty()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  return push(std::move(value), false, nullptr);
}

template <typename T>
Var Tape<T>::param(Parameter<T>& param) {
  Var v = push(param.value, true, nullptr);
  nodes_.back().param = &param;
  return v;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad.empty()) return Tensor<T>(node.value.shape());
  return Tensor<T>(node.value.shape(), node.grad);
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (loss.id >= nodes_.size()) {
    throw UsageError("backward: unknown node");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw UsageError("backward: root must be a scalar, got shape " +
                     shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& node : nodes_) node.grad.clear();
  if (!nodes_[loss.id].needs_grad) return;
  grad_buffer(loss)[0] = T(1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty()) continue;
    if (node.backward) {
      node.backward(*this, id);
    } else if (node.param != nullptr) {
      auto dst = node.param->grad.mutable_data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
    }
  }
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b) {
  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<T> out(Shape{m, n});
  MutMap<T>(out.mutable_data().data(), m, n).noalias() =
      ConstMap<T>(av.data().data(), m, k) * ConstMap<T>(bv.data().data(), k, n);
  return push(std::move(out), any_needs_grad({a, b}),
              [a, b, m, k, n](Tape& tape, std::size_t self) {
                ConstMap<T> dc(tape.out_grad(self).data(), m, n);
                if (auto ga = tape.grad_buffer(a); !ga.empty()) {
                  ConstMap<T> bm(tape.value(b).data().data(), k, n);
                  MutMap<T>(ga.data(), m, k).noalias() += dc * bm.transpose();
                }
                if (auto gb = tape.grad_buffer(b); !gb.empty()) {
                  ConstMap<T> am(tape.value(a).data().data(), m, k);
                  MutMap<T>(gb.data(), k, n).noalias() += am.transpose() * dc;
                }
              });
}

template <typename T>
Var Tape<T>::binary(Var a, Var b, int kind) {
  static constexpr const char* kNames[] = {"add", "sub", "mul"};
  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  const Broadcast mode = broadcast_mode(av.shape(), bv.shape(), kNames[kind]);
  const std::size_t n = av.size();
  const std::size_t bn = bv.size();
  Tensor<T> out(av.shape());
  auto o = out.mutable_data();
  auto x = av.data();
  auto y = bv.data();
  for (std::size_t i = 0; i < n; ++i) {
    const T yi = mode == Broadcast::kSame ? y[i] : y[i % bn];
    o[i] = kind == kAdd ? x[i] + yi : kind == kSub ? x[i] - yi : x[i] * yi;
  }
  return push(std::move(out), any_needs_grad({a, b}),
              [a, b, kind, mode, n, bn](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                if (auto ga = tape.grad_buffer(a); !ga.empty()) {
                  if (kind == kMul) {
                    auto y = tape.value(b).data();
                    for (std::size_t i = 0; i < n; ++i) {
                      ga[i] += g[i] * (mode == Broadcast::kSame ? y[i] : y[i % bn]);
                    }
                  } else {
                    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                  }
                }
                if (auto gb = tape.grad_buffer(b); !gb.empty()) {
                  auto x = tape.value(a).data();
                  for (std::size_t i = 0; i < n; ++i) {
                    T contrib = kind == kAdd ? g[i] : kind == kSub ? -g[i] : g[i] * x[i];
                    gb[mode == Broadcast::kSame ? i : i % bn] += contrib;
                  }
                }
              });
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  return binary(a, b, kAdd);
}

template <typename T>
Var Tape<T>::sub(Var a, Var b) {
  return binary(a, b, kSub);
}

template <typename T>
Var Tape<T>::mul(Var a, Var b) {
  return binary(a, b, kMul);
}

template <typename T>
Var Tape<T>::affine(Var a, T alpha, T beta) {
  const Tensor<T>& av = value(a);
  Tensor<T> out(av.shape());
  auto o = out.mutable_data();
  auto x = av.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = alpha * x[i] + beta;
  return push(std::move(out), any_needs_grad({a}),
              [a, alpha](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto ga = tape.grad_buffer(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += alpha * g[i];
              });
}

template <typename T>
Var Tape<T>::tanh(Var a) {
  const Tensor<T>& av = value(a);
  Tensor<T> out(av.shape());
  auto o = out.mutable_data();
  auto x = av.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::tanh(x[i]);
  return push(std::move(out), any_needs_grad({a}),
              [a](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto y = tape.value(Var{static_cast<std::uint32_t>(self)}).data();
                auto ga = tape.grad_buffer(a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  ga[i] += g[i] * (T(1) - y[i] * y[i]);
                }
              });
}

template <typename T>
Var Tape<T>::sigmoid(Var a) {
  const Tensor<T>& av = value(a);
  Tensor<T> out(av.shape());
  auto o = out.mutable_data();
  auto x = av.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = stable_sigmoid(x[i]);
  return push(std::move(out), any_needs_grad({a}),
              [a](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto y = tape.value(Var{static_cast<std::uint32_t>(self)}).data();
                auto ga = tape.grad_buffer(a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  ga[i] += g[i] * y[i] * (T(1) - y[i]);
                }
              });
}

template <typename T>
Var Tape<T>::concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Tensor<T>& first = value(parts[0]);
  const std::size_t rows = first.rows();
  const std::size_t rank = first.rank();
  if (rank == 0) throw DimensionError("concat: scalar input");
  std::vector<std::size_t> widths;
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::size_t total = 0;
  bool needs_grad = false;
  for (Var p : parts) {
    const Tensor<T>& pv = value(p);
    if (pv.rank() != rank || pv.rows() != rows ||
        !std::equal(pv.shape().begin(), pv.shape().end() - 1,
                    first.shape().begin())) {
      throw DimensionError("concat: incompatible shapes " +
                           shape_string(first.shape()) + " and " +
                           shape_string(pv.shape()));
    }
    widths.push_back(pv.cols());
    total += pv.cols();
    needs_grad = needs_grad || requires_grad(p);
  }
  Shape shape = first.shape();
  shape.back() = total;
  Tensor<T> out(shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto src = value(inputs[k]).data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.begin() + r * widths[k], widths[k],
                  o.begin() + r * total + offset);
    }
    offset += widths[k];
  }
  return push(std::move(out), needs_grad,
              [inputs, widths, rows, total](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                std::size_t off = 0;
                for (std::size_t k = 0; k < inputs.size(); ++k) {
                  if (auto gk = tape.grad_buffer(inputs[k]); !gk.empty()) {
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t c = 0; c < widths[k]; ++c) {
                        gk[r * widths[k] + c] += g[r * total + off + c];
                      }
                    }
                  }
                  off += widths[k];
                }
              });
}

template <typename T>
Var Tape<T>::slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor<T>& av = value(a);
  if (av.rank() == 0 || begin >= end || end > av.cols()) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for shape " +
                         shape_string(av.shape()));
  }
  const std::size_t rows = av.rows(), cols = av.cols(), w = end - begin;
  Shape shape = av.shape();
  shape.back() = w;
  Tensor<T> out(shape);
  auto o = out.mutable_data();
  auto x = av.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.begin() + r * cols + begin, w, o.begin() + r * w);
  }
  return push(std::move(out), any_needs_grad({a}),
              [a, rows, cols, begin, w](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto ga = tape.grad_buffer(a);
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t c = 0; c < w; ++c) {
                    ga[r * cols + begin + c] += g[r * w + c];
                  }
                }
              });
}

template <typename T>
Var Tape<T>::reshape(Var a, Shape shape) {
  const Tensor<T>& av = value(a);
  if (shape_numel(shape) != av.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(av.shape()) +
                         " as " + shape_string(shape));
  }
  return push(av.reshaped(std::move(shape)), any_needs_grad({a}),
              [a](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto ga = tape.grad_buffer(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
              });
}

template <typename T>
Var Tape<T>::sum(Var a) {
  const Tensor<T>& av = value(a);
  T total = T(0);
  for (T x : av.data()) total += x;
  return push(Tensor<T>::scalar(total), any_needs_grad({a}),
              [a](Tape& tape, std::size_t self) {
                const T g = tape.out_grad(self)[0];
                for (T& ga : tape.grad_buffer(a)) ga += g;
              });
}

template <typename T>
Var Tape<T>::mean(Var a) {
  const Tensor<T>& av = value(a);
  T total = T(0);
  for (T x : av.data()) total += x;
  const T n = static_cast<T>(av.size());
  return push(Tensor<T>::scalar(total / n), any_needs_grad({a}),
              [a, n](Tape& tape, std::size_t self) {
                const T g = tape.out_grad(self)[0] / n;
                for (T& ga : tape.grad_buffer(a)) ga += g;
              });
}

template <typename T>
Var Tape<T>::embedding(Var table, std::size_t index) {
  const std::size_t idx[] = {index};
  Var rows = embedding_rows(table, idx);
  return reshape(rows, Shape{value(table).cols()});
}

template <typename T>
Var Tape<T>::embedding_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor<T>& tv = value(table);
  if (tv.rank() != 2) {
    throw DimensionError("embedding: table must be rank 2, got " +
                         shape_string(tv.shape()));
  }
  const std::size_t vocab = tv.dim(0), d = tv.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= vocab) {
      throw LookupError("embedding: index " + std::to_string(idx) +
                        " out of range for vocabulary of size " +
                        std::to_string(vocab));
    }
  }
  if (indices.empty()) throw DimensionError("embedding: no indices");
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor<T> out(Shape{idx.size(), d});
  auto o = out.mutable_data();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto src = tv.row(idx[r]);
    std::copy(src.begin(), src.end(), o.begin() + r * d);
  }
  return push(std::move(out), any_needs_grad({table}),
              [table, idx = std::move(idx), d](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto gt = tape.grad_buffer(table);
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  for (std::size_t c = 0; c < d; ++c) {
                    gt[idx[r] * d + c] += g[r * d + c];
                  }
                }
              });
}

template <typename T>
Var Tape<T>::gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor<T>& av = value(a);
  if (av.rank() != 2) {
    throw DimensionError("gather_rows: input must be rank 2, got " +
                         shape_string(av.shape()));
  }
  for (std::size_t r : rows) {
    if (r >= av.dim(0)) {
      throw LookupError("gather_rows: row " + std::to_string(r) +
                        " out of range for " + shape_string(av.shape()));
    }
  }
  return embedding_rows(a, rows);
}

template <typename T>
Var Tape<T>::softmax(Var a) {
  const Tensor<T>& av = value(a);
  if (av.rank() == 0) throw DimensionError("softmax: scalar input");
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor<T> out(av.shape());
  auto o = out.mutable_data();
  auto x = av.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * cols;
    T* orow = o.data() + r * cols;
    const T mx = *std::max_element(xr, xr + cols);
    T z = T(0);
    for (std::size_t c = 0; c < cols; ++c) {
      orow[c] = std::exp(xr[c] - mx);
      z += orow[c];
    }
    for (std::size_t c = 0; c < cols; ++c) orow[c] /= z;
  }
  return push(std::move(out), any_needs_grad({a}),
              [a, rows, cols](Tape& tape, std::size_t self) {
                auto g = tape.out_grad(self);
                auto y = tape.value(Var{static_cast<std::uint32_t>(self)}).data();
                auto ga = tape.grad_buffer(a);
                for (std::size_t r = 0; r < rows; ++r) {
                  T dot = T(0);
                  for (std::size_t c = 0; c < cols; ++c) {
                    dot += g[r * cols + c] * y[r * cols + c];
                  }
                  for (std::size_t c = 0; c < cols; ++c) {
                    ga[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
                  }
                }
              });
}

template <typename T>
Var Tape<T>::softmax_cross_entropy(Var logits,
                                   std::span<const std::size_t> targets) {
  const Tensor<T>& lv = value(logits);
  if (lv.rank() != 1 && lv.rank() != 2) {
    throw DimensionError("softmax_cross_entropy: logits must be [C] or [B x C], got " +
                         shape_string(lv.shape()));
  }
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (cols < 2) {
    throw DimensionError("softmax_cross_entropy: need at least 2 classes");
  }
  if (targets.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(rows) +
                         " rows but " + std::to_string(targets.size()) +
                         " targets");
  }
  for (std::size_t t : targets) {
    if (t >= cols) {
      throw LabelError("softmax_cross_entropy: target " + std::to_string(t) +
                       " out of range for " + std::to_string(cols) +
                       " classes");
    }
  }
  std::vector<T> probs(lv.size());
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  auto x = lv.data();
  T loss = T(0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * cols;
    T* pr = probs.data() + r * cols;
    const T mx = *std::max_element(xr, xr + cols);
    T z = T(0);
    for (std::size_t c = 0; c < cols; ++c) {
      pr[c] = std::exp(xr[c] - mx);
      z += pr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) pr[c] /= z;
    loss += std::log(z) - (xr[tgt[r]] - mx);
  }
  return push(Tensor<T>::scalar(loss), any_needs_grad({logits}),
              [logits, probs = std::move(probs), tgt = std::move(tgt), cols](
                  Tape& tape, std::size_t self) {
                const T g = tape.out_grad(self)[0];
                auto gl = tape.grad_buffer(logits);
                for (std::size_t r = 0; r < tgt.size(); ++r) {
                  for (std::size_t c = 0; c < cols; ++c) {
                    const T onehot = c == tgt[r] ? T(1) : T(0);
                    gl[r * cols + c] += g * (probs[r * cols + c] - onehot);
                  }
                }
              });
}

template class Tape<float>;
template class Tape<double>;

}  // namespace mobcausal::nn
