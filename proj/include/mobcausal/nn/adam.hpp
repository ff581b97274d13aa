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

#ifndef MOBCAUSAL_NN_ADAM_HPP_
#define MOBCAUSAL_NN_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "mobcausal/nn/parameters.hpp"

namespace mobcausal::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment estimates, one entry per parameter in set order. Empty until the
// first step.
template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t t = 0;
};

// Bias-corrected Adam update using each parameter's current grad:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state);

extern template void adam_step<float>(ParameterSet<float>&, AdamState<float>&);
extern template void adam_step<double>(ParameterSet<double>&,
                                       AdamState<double>&);

}  // namespace mobcausal::nn

#endif  // MOBCAUSAL_NN_ADAM_HPP_
