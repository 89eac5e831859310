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

#ifndef PCGNET_DATASET_HPP
#define PCGNET_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pcgnet/audio.hpp"
#include "pcgnet/manifest.hpp"
#include "pcgnet/tensor.hpp"

namespace pcgnet::data {

struct ScanResult {
  Manifest manifest;
  int skipped_non_wav = 0;
};

// Directory-name to label mapping; the default expects subdirectories named
// N, AS, MS, MR, MVP.
using ClassDirMap = std::vector<std::pair<std::string, Label>>;
ClassDirMap default_class_dirs();

// Indexes a corpus laid out as one subdirectory per class. Every WAV becomes
// an original entry labeled by its directory; ids are "<class>/<stem>" and
// ordered lexicographically. Missing or empty class directories are errors.
ScanResult scan_y18(const std::filesystem::path& root,
                    const ClassDirMap& dirs = default_class_dirs());

// Fold assignment over original recordings only; codec copies always inherit
// their parent's fold, which keeps near-duplicates out of the training side
// of their parent's test fold.
struct FoldPlan {
  int k = 0;
  uint64_t seed = 0;
  std::unordered_map<std::string, int> assignment;  // original id -> fold

  int fold_of(const std::string& id) const;
};

// Per class: shuffle the originals with the seeded stream, deal round-robin
// into k folds. Requires at least k originals in every class.
FoldPlan make_folds(const Manifest& manifest, int k, uint64_t seed);

struct FoldSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_original_ids;
  std::vector<std::string> test_codec_ids;
};

// Test originals are the fold's originals; test codec entries are the codec
// copies of those originals. Everything else trains (codec copies only when
// use_augmented_train). No id ever sits on both sides.
FoldSplit fold_split(const Manifest& manifest, const FoldPlan& plan, int fold,
                     bool use_augmented_train);

// Deterministic synthetic phonocardiogram: S1/S2 Gaussian-enveloped pulses at
// roughly one beat per second (S2 about 330 ms after S1) plus a
// class-specific murmur texture. Peak amplitude 0.9.
audio::AudioClip synth_pcg(Label label, uint64_t seed, double duration_s,
                           int rate);

struct Batch {
  nn::Tensor<float> inputs;  // [B, 1, input_len]
  std::vector<int> labels;   // [B]
};

// Reads, resamples to input_rate, length-standardizes to input_len and stacks
// the given ids in order.
Batch load_batch(const Manifest& manifest, const std::vector<std::string>& ids,
                 int input_rate, size_t input_len);

// Builds a batch from already-preprocessed rows (each input_len samples).
Batch pack_batch(const std::vector<const std::vector<float>*>& rows,
                 const std::vector<int>& labels, size_t input_len);

}  // namespace pcgnet::data

#endif  // PCGNET_DATASET_HPP
