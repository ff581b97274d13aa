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

#ifndef MOBCAUSAL_NN_CHECKPOINT_HPP_
#define MOBCAUSAL_NN_CHECKPOINT_HPP_

#include <filesystem>

#include "mobcausal/nn/parameters.hpp"

namespace mobcausal::nn {

inline constexpr const char* kParamsManifest = "params.json";
inline constexpr const char* kParamsBinary = "params.bin";

// Writes `dir/params.json` (name -> shape, dtype, byte_offset, byte_length)
// and `dir/params.bin` (little-endian float32, parameters back to back in
// set order). Creates `dir` if needed.
template <typename T>
void save_parameters(const std::filesystem::path& dir,
                     const ParameterSet<T>& params);

// Reads a checkpoint written by save_parameters into a fresh set.
// Throws IoError if files are missing and FormatError if the manifest and
// binary disagree in length.
ParameterSet<float> read_parameters(const std::filesystem::path& dir);

// Loads values into an existing set; names and shapes must match exactly.
template <typename T>
void load_parameters(const std::filesystem::path& dir,
                     ParameterSet<T>& params);

extern template void save_parameters<float>(const std::filesystem::path&,
                                            const ParameterSet<float>&);
extern template void save_parameters<double>(const std::filesystem::path&,
                                             const ParameterSet<double>&);
extern template void load_parameters<float>(const std::filesystem::path&,
                                            ParameterSet<float>&);
extern template void load_parameters<double>(const std::filesystem::path&,
                                             ParameterSet<double>&);

}  // namespace mobcausal::nn

#endif  // MOBCAUSAL_NN_CHECKPOINT_HPP_
