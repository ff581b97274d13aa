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

#include "mobcausal/nn/parameters.hpp"

#include <cmath>

namespace mobcausal::nn {

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Tensor<T> value) {
  if (index_.contains(name)) {
    throw UsageError("duplicate parameter name '" + name + "'");
  }
  index_.emplace(name, params_.size());
  Tensor<T> grad(value.shape());
  params_.push_back(Parameter<T>{std::move(name), std::move(value),
                                 std::move(grad)});
  return params_.back();
}

template <typename T>
Parameter<T>& ParameterSet<T>::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw LookupError("unknown parameter '" + std::string(name) + "'");
  }
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw LookupError("unknown parameter '" + std::string(name) + "'");
  }
  return params_[it->second];
}

template <typename T>
bool ParameterSet<T>::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

template <typename T>
std::size_t ParameterSet<T>::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) {
    for (T& g : p.grad.mutable_data()) g = T(0);
  }
}

template <typename T>
double ParameterSet<T>::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (T g : p.grad.data()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

template <typename T>
void ParameterSet<T>::scale_grad(double factor) {
  for (auto& p : params_) {
    for (T& g : p.grad.mutable_data()) g = static_cast<T>(g * factor);
  }
}

template <typename T>
void ParameterSet<T>::assign_values(const ParameterSet& other) {
  if (other.size() != size()) {
    throw DimensionError("parameter set sizes differ");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw DimensionError("parameter '" + dst.name +
                           "' does not match '" + src.name + "'");
    }
    dst.value = src.value;
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace mobcausal::nn
