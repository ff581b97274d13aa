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

#ifndef MOBCAUSAL_NN_PARAMETERS_HPP_
#define MOBCAUSAL_NN_PARAMETERS_HPP_

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <string_view>

#include "mobcausal/nn/tensor.hpp"

namespace mobcausal::nn {

// A named trainable leaf. `grad` always has the shape of `value`.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

// Insertion-ordered collection of parameters. References returned by add()
// and at() stay valid for the lifetime of the set.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value);

  Parameter<T>& at(std::string_view name);
  const Parameter<T>& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // Global L2 norm over every gradient, accumulated in double.
  double grad_norm() const;
  void scale_grad(double factor);

  // Copies values (not gradients) from a set with identical names and shapes.
  void assign_values(const ParameterSet& other);

 private:
  std::deque<Parameter<T>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace mobcausal::nn

#endif  // MOBCAUSAL_NN_PARAMETERS_HPP_
