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

// Command-line front end for the heart-sound classification pipeline:
//   scan      index a corpus laid out as class directories
//   synth     generate a synthetic corpus
//   augment   create codec-distorted training copies
//   folds     compute and inspect a cross-validation plan
//   train     k-fold cross-validation training
//   eval      score a saved checkpoint on a manifest
//   gradcheck run the gradient verification suite

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcgnet/checkpoint.hpp"
#include "pcgnet/codec.hpp"
#include "pcgnet/dataset.hpp"
#include "pcgnet/grad_suite.hpp"
#include "pcgnet/manifest.hpp"
#include "pcgnet/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;

// Parses "4500" or "4.5k" into bits per second.
int parse_bitrate(const std::string& text) {
  std::string t = text;
  double scale = 1.0;
  if (!t.empty() && (t.back() == 'k' || t.back() == 'K')) {
    scale = 1000.0;
    t.pop_back();
  }
  size_t consumed = 0;
  const double value = std::stod(t, &consumed);
  if (consumed != t.size() || value <= 0.0) {
    throw CLI::ValidationError("bitrate", "invalid bitrate: " + text);
  }
  return static_cast<int>(value * scale + 0.5);
}

std::vector<int> parse_bitrates(const std::string& list) {
  std::vector<int> out;
  size_t start = 0;
  while (start <= list.size()) {
    const size_t comma = list.find(',', start);
    const std::string item =
        list.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    if (!item.empty()) out.push_back(parse_bitrate(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_class_counts(const pcgnet::data::Manifest& manifest) {
  std::map<pcgnet::data::Label, int> counts;
  for (const auto& e : manifest.entries()) {
    if (e.is_original()) counts[e.label] += 1;
  }
  for (int i = 0; i < pcgnet::data::kNumClasses; ++i) {
    const auto label = static_cast<pcgnet::data::Label>(i);
    std::printf("  %-4s %d\n", pcgnet::data::label_name(label), counts[label]);
  }
}

void print_confusion(const pcgnet::train::ConfusionMatrix& m) {
  std::printf("  true\\pred");
  for (int c = 0; c < pcgnet::data::kNumClasses; ++c) {
    std::printf("%6s", pcgnet::data::label_name(
                           static_cast<pcgnet::data::Label>(c)));
  }
  std::printf("\n");
  for (int r = 0; r < pcgnet::data::kNumClasses; ++r) {
    std::printf("  %-9s",
                pcgnet::data::label_name(static_cast<pcgnet::data::Label>(r)));
    for (int c = 0; c < pcgnet::data::kNumClasses; ++c) {
      std::printf("%6d", m[static_cast<size_t>(r)][static_cast<size_t>(c)]);
    }
    std::printf("\n");
  }
}

int cmd_scan(const std::string& root, const std::string& out_manifest) {
  const pcgnet::data::ScanResult result = pcgnet::data::scan_y18(root);
  result.manifest.save(out_manifest);
  std::printf("scanned %s\n", root.c_str());
  print_class_counts(result.manifest);
  std::printf("  total %zu", result.manifest.size());
  if (result.skipped_non_wav > 0) {
    std::printf(" (skipped %d non-WAV files)", result.skipped_non_wav);
  }
  std::printf("\nmanifest written to %s\n", out_manifest.c_str());
  return kExitOk;
}

int cmd_synth(const std::string& out_dir, int per_class, uint64_t seed,
              int rate) {
  namespace fs = std::filesystem;
  pcgnet::data::Manifest manifest;
  for (int c = 0; c < pcgnet::data::kNumClasses; ++c) {
    const auto label = static_cast<pcgnet::data::Label>(c);
    const fs::path class_dir = fs::path(out_dir) / pcgnet::data::label_name(label);
    fs::create_directories(class_dir);
    for (int i = 0; i < per_class; ++i) {
      // Durations cycle across the corpus's 1-4 s range.
      const double duration_s = 1.0 + static_cast<double>(i % 4);
      const uint64_t clip_seed =
          pcgnet::mix_seed(seed, static_cast<uint64_t>(c) * 100000 +
                                     static_cast<uint64_t>(i));
      const auto clip =
          pcgnet::data::synth_pcg(label, clip_seed, duration_s, rate);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.wav",
                    pcgnet::data::label_name(label), i);
      const fs::path wav_path = class_dir / name;
      pcgnet::audio::write_wav(clip, wav_path);

      pcgnet::data::ManifestEntry entry;
      entry.id = std::string(pcgnet::data::label_name(label)) + "/" +
                 fs::path(name).stem().string();
      entry.path = wav_path.string();
      entry.label = label;
      manifest.add(std::move(entry));
    }
  }
  const fs::path manifest_path = fs::path(out_dir) / "manifest.jsonl";
  manifest.save(manifest_path);
  std::printf("wrote %zu clips under %s\n", manifest.size(), out_dir.c_str());
  print_class_counts(manifest);
  std::printf("manifest written to %s\n", manifest_path.string().c_str());
  return kExitOk;
}

int cmd_augment(const std::string& manifest_path, const std::string& out_dir,
                const std::string& bitrates, const std::string& engine,
                const std::string& encoder_template, uint64_t seed, int jobs,
                const std::string& out_manifest) {
  const auto manifest = pcgnet::data::Manifest::load(manifest_path);
  pcgnet::codec::AugmentOptions options;
  options.bitrates = parse_bitrates(bitrates);
  options.engine = engine == "external" ? pcgnet::codec::Engine::kExternal
                                        : pcgnet::codec::Engine::kBuiltin;
  options.out_dir = out_dir;
  options.encoder_template = encoder_template;
  options.seed = seed;
  options.jobs = jobs;

  const auto augmented = pcgnet::codec::augment_manifest(manifest, options);
  const std::string out_path =
      out_manifest.empty()
          ? (std::filesystem::path(out_dir) / "manifest.jsonl").string()
          : out_manifest;
  augmented.save(out_path);
  std::printf("augmented %zu originals x %zu bitrates -> %zu entries\n",
              manifest.size(), options.bitrates.size(), augmented.size());
  std::printf("manifest written to %s\n", out_path.c_str());
  return kExitOk;
}

int cmd_folds(const std::string& manifest_path, int k, uint64_t seed,
              const std::string& out_plan) {
  const auto manifest = pcgnet::data::Manifest::load(manifest_path);
  const auto plan = pcgnet::data::make_folds(manifest, k, seed);

  std::vector<std::map<pcgnet::data::Label, int>> counts(
      static_cast<size_t>(k));
  for (const auto& e : manifest.entries()) {
    if (e.is_original()) {
      counts[static_cast<size_t>(plan.fold_of(e.id))][e.label] += 1;
    }
  }
  std::printf("fold plan: k=%d seed=%llu\n", k,
              static_cast<unsigned long long>(seed));
  for (int f = 0; f < k; ++f) {
    int total = 0;
    std::printf("  fold %2d:", f);
    for (int c = 0; c < pcgnet::data::kNumClasses; ++c) {
      const auto label = static_cast<pcgnet::data::Label>(c);
      const int n = counts[static_cast<size_t>(f)][label];
      total += n;
      std::printf(" %s=%d", pcgnet::data::label_name(label), n);
    }
    std::printf(" total=%d\n", total);
  }

  if (!out_plan.empty()) {
    nlohmann::json j;
    j["k"] = plan.k;
    j["seed"] = plan.seed;
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto* e : manifest.originals()) {
      assignment[e->id] = plan.fold_of(e->id);
    }
    j["assignment"] = std::move(assignment);
    std::ofstream out(out_plan, std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write fold plan: " + out_plan);
    }
    out << j.dump(2) << "\n";
    std::printf("plan written to %s\n", out_plan.c_str());
  }
  return kExitOk;
}

int cmd_train(const std::string& manifest_path,
              const pcgnet::train::TrainConfig& config) {
  const auto manifest = pcgnet::data::Manifest::load(manifest_path);
  const auto report = pcgnet::train::cross_validate(manifest, config);
  for (const auto& fold : report.folds) {
    std::printf("fold %2d: original CER %.4f%%", fold.fold, fold.cer_original);
    if (fold.cer_codec) {
      std::printf("  codec CER %.4f%%", *fold.cer_codec);
    }
    std::printf("\n");
  }
  std::printf("mean original CER %.4f%% (std %.4f)\n",
              report.mean_cer_original, report.std_cer_original);
  if (report.mean_cer_codec) {
    std::printf("mean codec CER %.4f%% (std %.4f)\n", *report.mean_cer_codec,
                *report.std_cer_codec);
  }
  if (!config.out_dir.empty()) {
    std::printf("report and checkpoints under %s\n",
                (config.out_dir / config.effective_run_id()).string().c_str());
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest_path,
             const std::string& subset_name, int batch_size) {
  const auto manifest = pcgnet::data::Manifest::load(manifest_path);
  pcgnet::train::Subset subset = pcgnet::train::Subset::kBoth;
  if (subset_name == "original") subset = pcgnet::train::Subset::kOriginal;
  if (subset_name == "codec") subset = pcgnet::train::Subset::kCodec;

  const auto result = pcgnet::train::evaluate_checkpoint(
      checkpoint, manifest, subset, 2000, 8000, batch_size);
  if (result.original) {
    std::printf("original subset: %d clips, CER %.4f%%\n",
                result.original->count, result.original->cer);
    print_confusion(result.original->confusion);
  }
  if (result.codec) {
    std::printf("codec subset: %d clips, CER %.4f%%\n", result.codec->count,
                result.codec->cer);
    for (const auto& [bitrate, value] : result.cer_codec_by_bitrate) {
      std::printf("  %d bps: CER %.4f%%\n", bitrate, value);
    }
    print_confusion(result.codec->confusion);
  } else if (subset != pcgnet::train::Subset::kOriginal) {
    std::printf("codec subset: no codec entries in manifest\n");
  }
  return kExitOk;
}

int cmd_gradcheck(int mode, int seeds) {
  const auto precision = mode == 32 ? pcgnet::nn::Precision::kFloat32
                                    : pcgnet::nn::Precision::kFloat64;
  const auto checks = pcgnet::nn::run_gradient_suite(precision, seeds);
  for (const auto& check : checks) {
    std::string skipped;
    if (check.seeds_skipped > 0) {
      skipped = ", " + std::to_string(check.seeds_skipped) + " skipped";
    }
    std::printf("[%s] %-24s max rel err %.3e (tol %.0e, %d seeds%s)\n",
                check.passed ? "PASS" : "FAIL", check.name.c_str(),
                check.max_rel_error, check.tolerance, check.seeds_checked,
                skipped.c_str());
  }
  return pcgnet::nn::all_passed(checks) ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-domain heart-sound classification pipeline"};
  app.require_subcommand(1);

  // scan
  auto* scan = app.add_subcommand("scan", "index a class-per-directory corpus");
  std::string scan_root, scan_out;
  scan->add_option("--root", scan_root, "corpus root directory")->required();
  scan->add_option("--out", scan_out, "output manifest path")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  int synth_per_class = 20;
  uint64_t synth_seed = 0;
  int synth_rate = 8000;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--per-class", synth_per_class, "clips per class");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--rate", synth_rate, "sample rate in Hz");

  // augment
  auto* augment =
      app.add_subcommand("augment", "write codec-distorted copies");
  std::string augment_manifest_path, augment_out, augment_out_manifest;
  std::string augment_bitrates = "4.5k,5.5k,7.7k";
  std::string augment_engine = "builtin";
  std::string augment_template;
  uint64_t augment_seed = 0;
  int augment_jobs = 1;
  augment->add_option("--manifest", augment_manifest_path, "input manifest")
      ->required();
  augment->add_option("--out", augment_out, "output directory for WAVs")
      ->required();
  augment->add_option("--bitrates", augment_bitrates,
                      "comma-separated bitrates, e.g. 4.5k,5.5k,7.7k");
  augment->add_option("--engine", augment_engine, "codec engine")
      ->check(CLI::IsMember({"builtin", "external"}));
  augment->add_option("--encoder-template", augment_template,
                      "external transcode commands with {input} {temp} "
                      "{output} {bitrate} placeholders, one per line");
  augment->add_option("--seed", augment_seed, "random seed (builtin engine)");
  augment->add_option("--jobs", augment_jobs, "parallel workers");
  augment->add_option("--out-manifest", augment_out_manifest,
                      "augmented manifest path (default <out>/manifest.jsonl)");

  // folds
  auto* folds = app.add_subcommand("folds", "compute a cross-validation plan");
  std::string folds_manifest, folds_out;
  int folds_k = 10;
  uint64_t folds_seed = 0;
  folds->add_option("--manifest", folds_manifest, "input manifest")->required();
  folds->add_option("--k", folds_k, "fold count");
  folds->add_option("--seed", folds_seed, "random seed");
  folds->add_option("--out", folds_out, "write the plan as JSON");

  // train
  auto* train = app.add_subcommand("train", "k-fold cross-validation training");
  std::string train_manifest, train_out, train_augmented = "on";
  pcgnet::train::TrainConfig config;
  train->add_option("--manifest", train_manifest, "input manifest")->required();
  train->add_option("--out", train_out, "output directory for report/checkpoints");
  train->add_option("--epochs", config.epochs, "training epochs per fold");
  train->add_option("--batch-size", config.batch_size, "mini-batch size");
  train->add_option("--lr", config.lr, "Adam learning rate");
  train->add_option("--weight-decay", config.weight_decay, "L2 weight decay");
  train->add_option("--k", config.k, "fold count");
  train->add_option("--seed", config.seed, "random seed");
  train->add_option("--jobs", config.jobs, "parallel folds");
  train->add_option("--augmented-train", train_augmented,
                    "train on codec copies too")
      ->check(CLI::IsMember({"on", "off"}));
  train->add_option("--run-id", config.run_id, "run identifier");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint, eval_manifest, eval_subset = "both";
  int eval_batch = 5;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint path")
      ->required();
  eval->add_option("--manifest", eval_manifest, "manifest to score")
      ->required();
  eval->add_option("--subset", eval_subset, "subset to score")
      ->check(CLI::IsMember({"original", "codec", "both"}));
  eval->add_option("--batch-size", eval_batch, "inference batch size");

  // gradcheck
  auto* gradcheck =
      app.add_subcommand("gradcheck", "run the gradient verification suite");
  int gradcheck_mode = 64;
  int gradcheck_seeds = 20;
  gradcheck->add_option("--mode", gradcheck_mode, "32 or 64 bit precision")
      ->check(CLI::IsMember({32, 64}));
  gradcheck->add_option("--seeds", gradcheck_seeds, "random instances per op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (scan->parsed()) return cmd_scan(scan_root, scan_out);
    if (synth->parsed()) {
      return cmd_synth(synth_out, synth_per_class, synth_seed, synth_rate);
    }
    if (augment->parsed()) {
      return cmd_augment(augment_manifest_path, augment_out, augment_bitrates,
                         augment_engine, augment_template, augment_seed,
                         augment_jobs, augment_out_manifest);
    }
    if (folds->parsed()) {
      return cmd_folds(folds_manifest, folds_k, folds_seed, folds_out);
    }
    if (train->parsed()) {
      config.use_augmented_train = train_augmented == "on";
      config.out_dir = train_out;
      return cmd_train(train_manifest, config);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_checkpoint, eval_manifest, eval_subset, eval_batch);
    }
    if (gradcheck->parsed()) {
      return cmd_gradcheck(gradcheck_mode, gradcheck_seeds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
