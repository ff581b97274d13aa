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

#include "mobcausal/nn/gru.hpp"

namespace mobcausal::nn {

template <typename T>
void add_gru_parameters(ParameterSet<T>& params, const std::string& prefix,
                        std::size_t input, std::size_t hidden) {
  for (const char* gate : {"z", "r", "h"}) {
    params.add(prefix + ".w_" + gate, Tensor<T>(Shape{input, hidden}));
    params.add(prefix + ".u_" + gate, Tensor<T>(Shape{hidden, hidden}));
    params.add(prefix + ".b_" + gate, Tensor<T>(Shape{hidden}));
  }
}

template <typename T>
GruWeights bind_gru(Tape<T>& tape, ParameterSet<T>& params,
                    const std::string& prefix) {
  auto bind = [&](const char* suffix) {
    return tape.param(params.at(prefix + suffix));
  };
  return GruWeights{bind(".w_z"), bind(".w_r"), bind(".w_h"),
                    bind(".u_z"), bind(".u_r"), bind(".u_h"),
                    bind(".b_z"), bind(".b_r"), bind(".b_h")};
}

template <typename T>
Var gru_cell(Tape<T>& tape, Var x, Var h, const GruWeights& w) {
  const bool vector_input = tape.value(x).rank() == 1;
  if (vector_input != (tape.value(h).rank() == 1)) {
    throw DimensionError("gru_cell: input " +
                         shape_string(tape.value(x).shape()) +
                         " and state " + shape_string(tape.value(h).shape()) +
                         " must have the same rank");
  }
  if (vector_input) {
    x = tape.reshape(x, Shape{1, tape.value(x).dim(0)});
    h = tape.reshape(h, Shape{1, tape.value(h).dim(0)});
  }
  const std::size_t hidden = tape.value(w.u_z).dim(0);
  if (tape.value(h).rank() != 2 || tape.value(h).dim(1) != hidden ||
      tape.value(x).dim(0) != tape.value(h).dim(0)) {
    throw DimensionError("gru_cell: state " +
                         shape_string(tape.value(h).shape()) +
                         " incompatible with input " +
                         shape_string(tape.value(x).shape()) +
                         " and hidden size " + std::to_string(hidden));
  }
  auto gate = [&](Var wx, Var uh, Var b, Var state) {
    return tape.add(tape.add(tape.matmul(x, wx), tape.matmul(state, uh)), b);
  };
  Var z = tape.sigmoid(gate(w.w_z, w.u_z, w.b_z, h));
  Var r = tape.sigmoid(gate(w.w_r, w.u_r, w.b_r, h));
  Var candidate = tape.tanh(gate(w.w_h, w.u_h, w.b_h, tape.mul(r, h)));
  Var keep = tape.mul(tape.affine(z, T(-1), T(1)), h);
  Var next = tape.add(keep, tape.mul(z, candidate));
  if (vector_input) next = tape.reshape(next, Shape{hidden});
  return next;
}

template void add_gru_parameters<float>(ParameterSet<float>&,
                                        const std::string&, std::size_t,
                                        std::size_t);
template void add_gru_parameters<double>(ParameterSet<double>&,
                                         const std::string&, std::size_t,
                                         std::size_t);
template GruWeights bind_gru<float>(Tape<float>&, ParameterSet<float>&,
                                    const std::string&);
template GruWeights bind_gru<double>(Tape<double>&, ParameterSet<double>&,
                                     const std::string&);
template Var gru_cell<float>(Tape<float>&, Var, Var, const GruWeights&);
template Var gru_cell<double>(Tape<double>&, Var, Var, const GruWeights&);

}  // namespace mobcausal::nn
