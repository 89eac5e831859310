// Copyright 2026 The pcgnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pcgnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace pcgnet::m5 {

namespace {

constexpr const char* kFormatTag = "pcgnet-checkpoint";
constexpr int kVersion = 1;

std::string floats_to_hex(const float* values, size_t count) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(count * 8);
  for (size_t i = 0; i < count; ++i) {
    uint32_t bits;
    std::memcpy(&bits, values + i, 4);
    for (int b = 0; b < 4; ++b) {  // little-endian byte order
      const uint8_t byte = static_cast<uint8_t>((bits >> (8 * b)) & 0xff);
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xf]);
    }
  }
  return out;
}

std::vector<float> hex_to_floats(const std::string& hex) {
  if (hex.size() % 8 != 0) {
    throw std::runtime_error("checkpoint: malformed hex tensor data");
  }
  auto nibble = [](char c) -> uint32_t {
    if (c >= '0' && c <= '9') return static_cast<uint32_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<uint32_t>(c - 'a' + 10);
    throw std::runtime_error("checkpoint: invalid hex digit");
  };
  std::vector<float> out(hex.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      const uint32_t hi = nibble(hex[i * 8 + static_cast<size_t>(b) * 2]);
      const uint32_t lo = nibble(hex[i * 8 + static_cast<size_t>(b) * 2 + 1]);
      bits |= ((hi << 4) | lo) << (8 * b);
    }
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

nlohmann::json tensor_to_json(const std::string& name,
                              const std::vector<int>& shape,
                              const float* values, size_t count) {
  nlohmann::json j;
  j["name"] = name;
  j["shape"] = shape;
  j["dtype"] = "f32";
  j["data"] = floats_to_hex(values, count);
  return j;
}

}  // namespace

void save_checkpoint(M5Model<float>& model, const nn::AdamState<float>* adam,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = kVersion;
  j["arch"] = {
      {"channels", model.config.channels},
      {"kernels", model.config.kernels},
      {"strides", model.config.strides},
      {"pools", model.config.pools},
      {"num_classes", model.config.num_classes},
      {"input_len", model.config.input_len},
  };

  nlohmann::json tensors = nlohmann::json::array();
  for (auto& [name, tensor] : model.named_parameters()) {
    tensors.push_back(tensor_to_json(name, tensor->shape(),
                                     tensor->data().data(),
                                     tensor->data().size()));
  }
  for (int b = 0; b < 4; ++b) {
    const auto& state = model.bn_state[static_cast<size_t>(b)];
    const std::string prefix = "block" + std::to_string(b) + ".bn.";
    const int channels = static_cast<int>(state.running_mean.size());
    tensors.push_back(tensor_to_json(prefix + "running_mean", {channels},
                                     state.running_mean.data(),
                                     state.running_mean.size()));
    tensors.push_back(tensor_to_json(prefix + "running_var", {channels},
                                     state.running_var.data(),
                                     state.running_var.size()));
  }
  j["tensors"] = std::move(tensors);

  if (adam != nullptr) {
    nlohmann::json a;
    a["step"] = adam->step;
    a["lr"] = adam->lr;
    a["weight_decay"] = adam->weight_decay;
    a["beta1"] = adam->beta1;
    a["beta2"] = adam->beta2;
    a["eps"] = adam->eps;
    nlohmann::json m = nlohmann::json::array();
    nlohmann::json v = nlohmann::json::array();
    for (const auto& buf : adam->m) m.push_back(floats_to_hex(buf.data(), buf.size()));
    for (const auto& buf : adam->v) v.push_back(floats_to_hex(buf.data(), buf.size()));
    a["m"] = std::move(m);
    a["v"] = std::move(v);
    j["adam"] = std::move(a);
  }

  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot write checkpoint: " + path.string());
  }
  f << j.dump(2) << "\n";
  if (!f) {
    throw std::runtime_error("checkpoint write failed: " + path.string());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() +
                             " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != kFormatTag || j.value("version", 0) != kVersion) {
    throw std::runtime_error("checkpoint " + path.string() +
                             " has unknown format or version");
  }

  M5Config config;
  const auto& arch = j.at("arch");
  arch.at("channels").get_to(config.channels);
  arch.at("kernels").get_to(config.kernels);
  arch.at("strides").get_to(config.strides);
  arch.at("pools").get_to(config.pools);
  config.num_classes = arch.at("num_classes").get<int>();
  config.input_len = arch.at("input_len").get<int>();

  LoadedCheckpoint loaded{build_m5<float>(config, 0), std::nullopt};
  auto named = loaded.model.named_parameters();

  auto fill = [&](const std::string& name, const std::vector<float>& values) {
    for (auto& [pname, tensor] : named) {
      if (pname == name) {
        if (tensor->data().size() != values.size()) {
          throw std::runtime_error("checkpoint tensor " + name +
                                   " has wrong element count");
        }
        std::copy(values.begin(), values.end(), tensor->data().begin());
        return true;
      }
    }
    return false;
  };

  size_t params_seen = 0;
  for (const auto& t : j.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto values = hex_to_floats(t.at("data").get<std::string>());
    if (fill(name, values)) {
      ++params_seen;
      continue;
    }
    // Batch-norm running statistics.
    bool matched = false;
    for (int b = 0; b < 4 && !matched; ++b) {
      const std::string prefix = "block" + std::to_string(b) + ".bn.";
      auto& state = loaded.model.bn_state[static_cast<size_t>(b)];
      if (name == prefix + "running_mean") {
        if (values.size() != state.running_mean.size()) {
          throw std::runtime_error("checkpoint tensor " + name +
                                   " has wrong element count");
        }
        state.running_mean = values;
        matched = true;
      } else if (name == prefix + "running_var") {
        if (values.size() != state.running_var.size()) {
          throw std::runtime_error("checkpoint tensor " + name +
                                   " has wrong element count");
        }
        state.running_var = values;
        matched = true;
      }
    }
    if (!matched) {
      throw std::runtime_error("checkpoint has unexpected tensor: " + name);
    }
  }
  if (params_seen != named.size()) {
    throw std::runtime_error("checkpoint is missing parameters (" +
                             std::to_string(params_seen) + " of " +
                             std::to_string(named.size()) + ")");
  }

  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    nn::AdamState<float> adam;
    adam.step = a.at("step").get<int64_t>();
    adam.lr = a.at("lr").get<double>();
    adam.weight_decay = a.at("weight_decay").get<double>();
    adam.beta1 = a.at("beta1").get<double>();
    adam.beta2 = a.at("beta2").get<double>();
    adam.eps = a.at("eps").get<double>();
    for (const auto& buf : a.at("m")) {
      adam.m.push_back(hex_to_floats(buf.get<std::string>()));
    }
    for (const auto& buf : a.at("v")) {
      adam.v.push_back(hex_to_floats(buf.get<std::string>()));
    }
    loaded.adam = std::move(adam);
  }
  return loaded;
}

}  // namespace pcgnet::m5
