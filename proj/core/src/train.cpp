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

#include "pcgnet/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "pcgnet/checkpoint.hpp"
#include "pcgnet/m5.hpp"
#include "pcgnet/optim.hpp"
#include "pcgnet/rng.hpp"

namespace pcgnet::train {

namespace {

// Preprocessed waveform store: id -> resampled, length-standardized samples.
// Filled once and read-only afterwards, so parallel folds can share it.
using ClipCache = std::unordered_map<std::string, std::vector<float>>;

std::vector<float> preprocess(const data::ManifestEntry& entry, int input_rate,
                              int input_len) {
  audio::AudioClip clip;
  try {
    clip = audio::read_wav(entry.path);
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot read " + entry.id + ": " + e.what());
  }
  clip = audio::resample(clip, input_rate);
  clip = audio::pad_or_crop(clip, static_cast<size_t>(input_len));
  return std::move(clip.samples);
}

void cache_ids(const data::Manifest& manifest,
               const std::vector<std::string>& ids, const TrainConfig& config,
               ClipCache& cache) {
  for (const auto& id : ids) {
    if (cache.count(id) != 0) continue;
    cache.emplace(id,
                  preprocess(manifest.at(id), config.input_rate,
                             config.input_len));
  }
}

data::Batch batch_from_cache(const ClipCache& cache,
                             const data::Manifest& manifest,
                             const std::vector<std::string>& ids, size_t begin,
                             size_t end, int input_len) {
  std::vector<const std::vector<float>*> rows;
  std::vector<int> labels;
  rows.reserve(end - begin);
  for (size_t i = begin; i < end; ++i) {
    rows.push_back(&cache.at(ids[i]));
    labels.push_back(static_cast<int>(manifest.at(ids[i]).label));
  }
  return data::pack_batch(rows, labels, static_cast<size_t>(input_len));
}

struct SubsetScore {
  int total = 0;
  int wrong = 0;
  ConfusionMatrix confusion{};

  double cer() const {
    return total == 0 ? 0.0 : 100.0 * wrong / static_cast<double>(total);
  }
};

void score_ids(m5::M5Model<float>& model, const ClipCache& cache,
               const data::Manifest& manifest,
               const std::vector<std::string>& ids, int batch_size,
               int input_len, SubsetScore& score,
               std::map<int, SubsetScore>* by_bitrate) {
  for (size_t begin = 0; begin < ids.size();
       begin += static_cast<size_t>(batch_size)) {
    const size_t end =
        std::min(ids.size(), begin + static_cast<size_t>(batch_size));
    data::Batch batch =
        batch_from_cache(cache, manifest, ids, begin, end, input_len);
    const std::vector<int> predictions = m5::predict(model, batch.inputs);
    for (size_t i = 0; i < predictions.size(); ++i) {
      const auto& entry = manifest.at(ids[begin + i]);
      const int truth = batch.labels[i];
      const int predicted = predictions[i];
      score.total += 1;
      score.confusion[static_cast<size_t>(truth)]
                     [static_cast<size_t>(predicted)] += 1;
      if (predicted != truth) score.wrong += 1;
      if (by_bitrate != nullptr) {
        auto& sub = (*by_bitrate)[entry.bitrate_bps];
        sub.total += 1;
        if (predicted != truth) sub.wrong += 1;
      }
    }
  }
}

FoldResult train_fold_cached(const data::Manifest& manifest,
                             const data::FoldPlan& plan, int fold,
                             const TrainConfig& config,
                             const ClipCache& cache) {
  const data::FoldSplit split =
      data::fold_split(manifest, plan, fold, config.use_augmented_train);
  if (split.train_ids.empty()) {
    throw std::runtime_error("fold " + std::to_string(fold) +
                             " has an empty training split");
  }

  m5::M5Config arch;
  arch.input_len = config.input_len;
  m5::M5Model<float> model = m5::build_m5<float>(
      arch, mix_seed(config.seed, 0x101ull + static_cast<uint64_t>(fold)));
  auto params = model.parameters();
  nn::AdamState<float> adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  adam.init(params);

  Rng shuffle_rng(
      mix_seed(config.seed, 0x201ull + static_cast<uint64_t>(fold)));
  std::vector<std::string> order = split.train_ids;

  FoldResult result;
  result.fold = fold;
  result.train_loss.reserve(static_cast<size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t loss_count = 0;
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      data::Batch batch = batch_from_cache(cache, manifest, order, begin, end,
                                           config.input_len);
      model.zero_grad();
      nn::Tensor<float> logits =
          m5::forward(model, batch.inputs, nn::Mode::kTrain);
      nn::Tensor<float> loss = nn::softmax_cross_entropy(logits, batch.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw std::runtime_error("training diverged (non-finite loss) in fold " +
                                 std::to_string(fold) + " at epoch " +
                                 std::to_string(epoch));
      }
      loss.backward();
      nn::adam_step(params, adam);
      loss_sum += value * static_cast<double>(end - begin);
      loss_count += end - begin;
    }
    result.train_loss.push_back(loss_sum / static_cast<double>(loss_count));
  }

  SubsetScore original_score;
  score_ids(model, cache, manifest, split.test_original_ids, config.batch_size,
            config.input_len, original_score, nullptr);
  result.cer_original = original_score.cer();
  result.confusion = original_score.confusion;

  if (!split.test_codec_ids.empty()) {
    SubsetScore codec_score;
    std::map<int, SubsetScore> by_bitrate;
    score_ids(model, cache, manifest, split.test_codec_ids, config.batch_size,
              config.input_len, codec_score, &by_bitrate);
    result.cer_codec = codec_score.cer();
    for (const auto& [bitrate, sub] : by_bitrate) {
      result.cer_codec_by_bitrate[bitrate] = sub.cer();
    }
  }

  if (!config.out_dir.empty()) {
    const auto run_dir = config.out_dir / config.effective_run_id();
    std::filesystem::create_directories(run_dir);
    m5::save_checkpoint(model, &adam,
                        run_dir / ("fold_" + std::to_string(fold) + ".ckpt"));
  }
  return result;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Population standard deviation; the fold set is the whole population here.
double std_of(const std::vector<double>& values, double mean) {
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

nlohmann::json confusion_to_json(const ConfusionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m) {
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string TrainConfig::effective_run_id() const {
  if (!run_id.empty()) return run_id;
  return "m5-s" + std::to_string(seed) + "-k" + std::to_string(k) +
         (use_augmented_train ? "-aug" : "-orig");
}

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0 || k < 2 || input_rate <= 0 ||
      input_len <= 0 || lr <= 0.0 || weight_decay < 0.0 || jobs < 1) {
    throw std::invalid_argument("invalid training configuration");
  }
}

double cer(const std::vector<int>& predictions,
           const std::vector<int>& labels) {
  if (predictions.empty()) {
    throw std::invalid_argument("cer: empty input");
  }
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("cer: " + std::to_string(predictions.size()) +
                                " predictions vs " +
                                std::to_string(labels.size()) + " labels");
  }
  size_t wrong = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] != labels[i]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) /
         static_cast<double>(predictions.size());
}

FoldResult train_fold(const data::Manifest& manifest,
                      const data::FoldPlan& plan, int fold,
                      const TrainConfig& config) {
  config.validate();
  const data::FoldSplit split =
      data::fold_split(manifest, plan, fold, config.use_augmented_train);
  ClipCache cache;
  cache_ids(manifest, split.train_ids, config, cache);
  cache_ids(manifest, split.test_original_ids, config, cache);
  cache_ids(manifest, split.test_codec_ids, config, cache);
  return train_fold_cached(manifest, plan, fold, config, cache);
}

CVReport cross_validate(const data::Manifest& manifest,
                        const TrainConfig& config) {
  config.validate();
  const data::FoldPlan plan =
      data::make_folds(manifest, config.k, mix_seed(config.seed, 0x7ull));

  // Preload every clip once; folds only read from the cache.
  ClipCache cache;
  {
    std::vector<const data::ManifestEntry*> entries;
    for (const auto& e : manifest.entries()) entries.push_back(&e);
    std::vector<std::vector<float>> rows(entries.size());
    std::atomic<size_t> cursor{0};
    std::mutex error_mutex;
    std::string error;
    auto worker = [&]() {
      while (true) {
        const size_t i = cursor.fetch_add(1);
        if (i >= entries.size()) return;
        try {
          rows[i] = preprocess(*entries[i], config.input_rate, config.input_len);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (error.empty()) error = e.what();
          return;
        }
      }
    };
    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (!error.empty()) throw std::runtime_error(error);
    for (size_t i = 0; i < entries.size(); ++i) {
      cache.emplace(entries[i]->id, std::move(rows[i]));
    }
  }

  CVReport report;
  report.config = config;
  report.folds.resize(static_cast<size_t>(config.k));
  {
    std::atomic<int> cursor{0};
    std::mutex error_mutex;
    std::string error;
    auto worker = [&]() {
      while (true) {
        const int fold = cursor.fetch_add(1);
        if (fold >= config.k) return;
        try {
          report.folds[static_cast<size_t>(fold)] =
              train_fold_cached(manifest, plan, fold, config, cache);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (error.empty()) {
            error = "fold " + std::to_string(fold) + ": " + e.what();
          }
          return;
        }
      }
    };
    const int jobs = std::max(1, std::min(config.jobs, config.k));
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (!error.empty()) throw std::runtime_error(error);
  }

  std::vector<double> original_cers, codec_cers;
  for (const auto& fold : report.folds) {
    original_cers.push_back(fold.cer_original);
    if (fold.cer_codec) codec_cers.push_back(*fold.cer_codec);
  }
  report.mean_cer_original = mean_of(original_cers);
  report.std_cer_original = std_of(original_cers, report.mean_cer_original);
  if (!codec_cers.empty()) {
    report.mean_cer_codec = mean_of(codec_cers);
    report.std_cer_codec = std_of(codec_cers, *report.mean_cer_codec);
  }

  if (!config.out_dir.empty()) {
    const auto run_dir = config.out_dir / config.effective_run_id();
    std::filesystem::create_directories(run_dir);
    save_report(report, run_dir / "report.json");
  }
  return report;
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                               const data::Manifest& manifest, Subset subset,
                               int input_rate, int input_len, int batch_size) {
  if (!std::filesystem::exists(checkpoint_path)) {
    throw std::runtime_error("checkpoint not found: " +
                             checkpoint_path.string());
  }
  m5::LoadedCheckpoint loaded = m5::load_checkpoint(checkpoint_path);
  if (loaded.model.config.num_classes != data::kNumClasses) {
    throw std::runtime_error(
        "architecture mismatch: checkpoint has " +
        std::to_string(loaded.model.config.num_classes) + " classes, expected " +
        std::to_string(data::kNumClasses));
  }
  if (loaded.model.config.input_len != input_len) {
    throw std::runtime_error(
        "architecture mismatch: checkpoint input length " +
        std::to_string(loaded.model.config.input_len) + ", requested " +
        std::to_string(input_len));
  }

  std::vector<std::string> original_ids, codec_ids;
  for (const auto& e : manifest.entries()) {
    (e.is_original() ? original_ids : codec_ids).push_back(e.id);
  }

  TrainConfig preprocess_config;
  preprocess_config.input_rate = input_rate;
  preprocess_config.input_len = input_len;

  EvalResult result;
  ClipCache cache;
  if (subset != Subset::kCodec) {
    cache_ids(manifest, original_ids, preprocess_config, cache);
    SubsetScore score;
    score_ids(loaded.model, cache, manifest, original_ids, batch_size,
              input_len, score, nullptr);
    SubsetEval eval;
    eval.count = score.total;
    eval.cer = score.cer();
    eval.confusion = score.confusion;
    result.original = eval;
  }
  if (subset != Subset::kOriginal && !codec_ids.empty()) {
    cache_ids(manifest, codec_ids, preprocess_config, cache);
    SubsetScore score;
    std::map<int, SubsetScore> by_bitrate;
    score_ids(loaded.model, cache, manifest, codec_ids, batch_size, input_len,
              score, &by_bitrate);
    SubsetEval eval;
    eval.count = score.total;
    eval.cer = score.cer();
    eval.confusion = score.confusion;
    result.codec = eval;
    for (const auto& [bitrate, sub] : by_bitrate) {
      result.cer_codec_by_bitrate[bitrate] = sub.cer();
    }
  }
  return result;
}

std::string report_to_json(const CVReport& report) {
  nlohmann::json j;
  j["config"] = {
      {"epochs", report.config.epochs},
      {"batch_size", report.config.batch_size},
      {"lr", report.config.lr},
      {"weight_decay", report.config.weight_decay},
      {"input_rate", report.config.input_rate},
      {"input_len", report.config.input_len},
      {"k", report.config.k},
      {"seed", report.config.seed},
      {"use_augmented_train", report.config.use_augmented_train},
      {"run_id", report.config.effective_run_id()},
  };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& fold : report.folds) {
    nlohmann::json f;
    f["fold"] = fold.fold;
    f["cer_original"] = fold.cer_original;
    if (fold.cer_codec) {
      f["cer_codec"] = *fold.cer_codec;
      nlohmann::json per_bitrate = nlohmann::json::object();
      for (const auto& [bitrate, value] : fold.cer_codec_by_bitrate) {
        per_bitrate[std::to_string(bitrate)] = value;
      }
      f["cer_codec_by_bitrate"] = std::move(per_bitrate);
    } else {
      f["cer_codec"] = nullptr;
    }
    f["confusion_original"] = confusion_to_json(fold.confusion);
    f["train_loss"] = fold.train_loss;
    folds.push_back(std::move(f));
  }
  j["folds"] = std::move(folds);
  j["mean_cer_original"] = report.mean_cer_original;
  j["std_cer_original"] = report.std_cer_original;
  if (report.mean_cer_codec) {
    j["mean_cer_codec"] = *report.mean_cer_codec;
    j["std_cer_codec"] = *report.std_cer_codec;
  } else {
    j["mean_cer_codec"] = nullptr;
    j["std_cer_codec"] = nullptr;
  }
  return j.dump(2) + "\n";
}

void save_report(const CVReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot write report: " + path.string());
  }
  f << report_to_json(report);
  if (!f) {
    throw std::runtime_error("report write failed: " + path.string());
  }
}

}  // namespace pcgnet::train
