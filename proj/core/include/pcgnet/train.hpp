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

#ifndef PCGNET_TRAIN_HPP
#define PCGNET_TRAIN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcgnet/dataset.hpp"
#include "pcgnet/manifest.hpp"

namespace pcgnet::train {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 5;
  double lr = 0.0005;
  double weight_decay = 0.0001;
  int input_rate = 2000;   // Hz fed to the model
  int input_len = 8000;    // 4 s at 2 kHz
  int k = 10;
  uint64_t seed = 0;
  bool use_augmented_train = true;
  int jobs = 1;            // fold-level parallelism; 1 is the reference mode
  std::string run_id;      // derived from seed/k/regime when empty
  std::filesystem::path out_dir;  // empty: nothing persisted

  std::string effective_run_id() const;
  void validate() const;
};

using ConfusionMatrix =
    std::array<std::array<int, data::kNumClasses>, data::kNumClasses>;

struct FoldResult {
  int fold = 0;
  double cer_original = 0.0;               // percent
  std::optional<double> cer_codec;         // percent, pooled over bitrates
  std::map<int, double> cer_codec_by_bitrate;
  ConfusionMatrix confusion{};             // original test subset, rows = truth
  std::vector<double> train_loss;          // per-epoch mean
};

struct CVReport {
  TrainConfig config;
  std::vector<FoldResult> folds;
  double mean_cer_original = 0.0;
  double std_cer_original = 0.0;
  std::optional<double> mean_cer_codec;
  std::optional<double> std_cer_codec;
};

// Classification error rate in percent: 100 * mismatches / total.
double cer(const std::vector<int>& predictions, const std::vector<int>& labels);

// Trains one fold from scratch (fresh seeded model, per-epoch reshuffle,
// Adam) and evaluates eval-mode CER on the fold's original test set and,
// when codec copies exist, on the codec test set separately.
FoldResult train_fold(const data::Manifest& manifest,
                      const data::FoldPlan& plan, int fold,
                      const TrainConfig& config);

// Runs every fold (in parallel when config.jobs > 1; results are identical
// either way since folds are independent), aggregates mean/std, and persists
// report plus per-fold checkpoints when config.out_dir is set.
CVReport cross_validate(const data::Manifest& manifest,
                        const TrainConfig& config);

enum class Subset { kOriginal, kCodec, kBoth };

struct SubsetEval {
  int count = 0;
  double cer = 0.0;
  ConfusionMatrix confusion{};
};

struct EvalResult {
  std::optional<SubsetEval> original;
  std::optional<SubsetEval> codec;  // absent when the manifest has no codec
  std::map<int, double> cer_codec_by_bitrate;
};

// Eval-mode inference of a saved checkpoint over manifest subsets.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                               const data::Manifest& manifest, Subset subset,
                               int input_rate = 2000, int input_len = 8000,
                               int batch_size = 5);

// Deterministic textual rendering (stable across runs for identical inputs).
std::string report_to_json(const CVReport& report);
void save_report(const CVReport& report, const std::filesystem::path& path);

}  // namespace pcgnet::train

#endif  // PCGNET_TRAIN_HPP
