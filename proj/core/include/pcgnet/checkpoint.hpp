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

#ifndef PCGNET_CHECKPOINT_HPP
#define PCGNET_CHECKPOINT_HPP

#include <filesystem>
#include <optional>

#include "pcgnet/m5.hpp"
#include "pcgnet/optim.hpp"

namespace pcgnet::m5 {

// Versioned textual checkpoint: a JSON document holding the architecture
// descriptor, every parameter (name, shape, float32 values as little-endian
// hex so the file is byte-stable across platforms), batch-norm running
// statistics, and optionally the Adam state.
void save_checkpoint(M5Model<float>& model, const nn::AdamState<float>* adam,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  M5Model<float> model;
  std::optional<nn::AdamState<float>> adam;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pcgnet::m5

#endif  // PCGNET_CHECKPOINT_HPP
