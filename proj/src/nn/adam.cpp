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

#include "mobcausal/nn/adam.hpp"

#include <cmath>

namespace mobcausal::nn {

template <typename T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " +
                         std::to_string(state.m.size()) +
                         " parameters but set has " +
                         std::to_string(params.size()));
  }
  state.t += 1;
  const AdamOptions& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  std::size_t k = 0;
  for (auto& p : params) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    ++k;
    if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
      throw DimensionError("adam_step: shape mismatch for '" + p.name + "'");
    }
    auto theta = p.value.mutable_data();
    auto g = p.grad.data();
    auto md = m.mutable_data();
    auto vd = v.mutable_data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      const double mi = o.beta1 * md[i] + (1.0 - o.beta1) * gi;
      const double vi = o.beta2 * vd[i] + (1.0 - o.beta2) * gi * gi;
      md[i] = static_cast<T>(mi);
      vd[i] = static_cast<T>(vi);
      const double step = o.lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps);
      theta[i] = static_cast<T>(theta[i] - step);
    }
  }
}

template void adam_step<float>(ParameterSet<float>&, AdamState<float>&);
template void adam_step<double>(ParameterSet<double>&, AdamState<double>&);

}  // namespace mobcausal::nn
