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

#ifndef MOBCAUSAL_NN_GRU_HPP_
#define MOBCAUSAL_NN_GRU_HPP_

#include <cstddef>
#include <string>

#include "mobcausal/nn/parameters.hpp"
#include "mobcausal/nn/tape.hpp"

namespace mobcausal::nn {

// Tape handles for one GRU layer. Input weights are [input x hidden],
// recurrent weights [hidden x hidden], biases [hidden].
struct GruWeights {
  Var w_z, w_r, w_h;
  Var u_z, u_r, u_h;
  Var b_z, b_r, b_h;
};

// Registers GRU parameters named `<prefix>.w_z` etc. Biases start at zero;
// weights are left zero-filled for the caller's initializer.
template <typename T>
void add_gru_parameters(ParameterSet<T>& params, const std::string& prefix,
                        std::size_t input, std::size_t hidden);

template <typename T>
GruWeights bind_gru(Tape<T>& tape, ParameterSet<T>& params,
                    const std::string& prefix);

// One GRU update on a batch of rows:
//   z = sigmoid(x W_z + h U_z + b_z)
//   r = sigmoid(x W_r + h U_r + b_r)
//   c = tanh(x W_h + (r * h) U_h + b_h)
//   h' = (1 - z) * h + z * c
// `x` is [B x input] (or [input]) and `h` is [B x hidden] (or [hidden]).
template <typename T>
Var gru_cell(Tape<T>& tape, Var x, Var h, const GruWeights& w);

extern template void add_gru_parameters<float>(ParameterSet<float>&,
                                               const std::string&, std::size_t,
                                               std::size_t);
extern template void add_gru_parameters<double>(ParameterSet<double>&,
                                                const std::string&, std::size_t,
                                                std::size_t);
extern template GruWeights bind_gru<float>(Tape<float>&, ParameterSet<float>&,
                                           const std::string&);
extern template GruWeights bind_gru<double>(Tape<double>&,
                                            ParameterSet<double>&,
                                            const std::string&);
extern template Var gru_cell<float>(Tape<float>&, Var, Var, const GruWeights&);
extern template Var gru_cell<double>(Tape<double>&, Var, Var,
                                     const GruWeights&);

}  // namespace mobcausal::nn

#endif  // MOBCAUSAL_NN_GRU_HPP_
