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

#include "mobcausal/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace mobcausal::nn {
namespace {

using ordered_json = nlohmann::ordered_json;

void put_f32(std::vector<char>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

template <typename T>
void save_parameters(const std::filesystem::path& dir,
                     const ParameterSet<T>& params) {
  std::filesystem::create_directories(dir);
  ordered_json entries = ordered_json::object();
  std::vector<char> blob;
  blob.reserve(params.numel() * 4);
  for (const auto& p : params) {
    const std::size_t offset = blob.size();
    for (T v : p.value.data()) put_f32(blob, static_cast<float>(v));
    entries[p.name] = {{"shape", p.value.shape()},
                       {"dtype", dtype_name(DType::kFloat32)},
                       {"byte_offset", offset},
                       {"byte_length", blob.size() - offset}};
  }
  ordered_json manifest = {{"format", "mobcausal-params"},
                           {"version", 1},
                           {"data_file", kParamsBinary},
                           {"total_bytes", blob.size()},
                           {"parameters", entries}};
  {
    std::ofstream bin(dir / kParamsBinary, std::ios::binary | std::ios::trunc);
    if (!bin) throw IoError("cannot write " + (dir / kParamsBinary).string());
    bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream js(dir / kParamsManifest, std::ios::trunc);
  if (!js) throw IoError("cannot write " + (dir / kParamsManifest).string());
  js << manifest.dump(2) << '\n';
}

ParameterSet<float> read_parameters(const std::filesystem::path& dir) {
  std::ifstream js(dir / kParamsManifest);
  if (!js) throw IoError("cannot read " + (dir / kParamsManifest).string());
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  std::ifstream bin(dir / kParamsBinary, std::ios::binary);
  if (!bin) throw IoError("cannot read " + (dir / kParamsBinary).string());
  std::vector<char> blob((std::istreambuf_iterator<char>(bin)),
                         std::istreambuf_iterator<char>());
  ParameterSet<float> params;
  try {
    const std::size_t total = manifest.at("total_bytes").get<std::size_t>();
    if (blob.size() != total) {
      throw FormatError("checkpoint binary has " + std::to_string(blob.size()) +
                        " bytes, manifest expects " + std::to_string(total));
    }
    std::size_t covered = 0;
    for (const auto& [name, entry] : manifest.at("parameters").items()) {
      const Shape shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("byte_offset").get<std::size_t>();
      const auto length = entry.at("byte_length").get<std::size_t>();
      if (entry.at("dtype").get<std::string>() != dtype_name(DType::kFloat32)) {
        throw FormatError("parameter '" + name + "' has unsupported dtype");
      }
      if (length != shape_numel(shape) * 4 || offset + length > blob.size()) {
        throw FormatError("parameter '" + name + "' has inconsistent extent");
      }
      std::vector<float> values(shape_numel(shape));
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = get_f32(blob.data() + offset + 4 * i);
      }
      params.add(name, Tensor<float>(shape, std::move(values)));
      covered += length;
    }
    if (covered != total) {
      throw FormatError("checkpoint parameters cover " + std::to_string(covered) +
                        " of " + std::to_string(total) + " bytes");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return params;
}

template <typename T>
void load_parameters(const std::filesystem::path& dir,
                     ParameterSet<T>& params) {
  ParameterSet<float> loaded = read_parameters(dir);
  if (loaded.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(loaded.size()) +
                      " parameters, model expects " +
                      std::to_string(params.size()));
  }
  for (auto& p : params) {
    if (!loaded.contains(p.name)) {
      throw FormatError("checkpoint is missing parameter '" + p.name + "'");
    }
    const auto& src = loaded.at(p.name);
    if (src.value.shape() != p.value.shape()) {
      throw FormatError("parameter '" + p.name + "' has shape " +
                        shape_string(src.value.shape()) + ", model expects " +
                        shape_string(p.value.shape()));
    }
    p.value = src.value.template cast<T>();
  }
}

template void save_parameters<float>(const std::filesystem::path&,
                                     const ParameterSet<float>&);
template void save_parameters<double>(const std::filesystem::path&,
                                      const ParameterSet<double>&);
template void load_parameters<float>(const std::filesystem::path&,
                                     ParameterSet<float>&);
template void load_parameters<double>(const std::filesystem::path&,
                                      ParameterSet<double>&);

}  // namespace mobcausal::nn
