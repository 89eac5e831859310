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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <doctest.h>

#include "oracles.hpp"
#include "pcgnet/audio.hpp"
#include "pcgnet/dataset.hpp"
#include "pcgnet/manifest.hpp"
#include "pcgnet/rng.hpp"

using namespace pcgnet::data;
using pcgnet::Rng;

namespace {

Manifest synthetic_manifest(int per_class, int bitrates) {
  Manifest manifest;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<Label>(c);
    for (int i = 0; i < per_class; ++i) {
      ManifestEntry entry;
      entry.id = std::string(label_name(label)) + "/" + std::to_string(i);
      entry.path = entry.id + ".wav";
      entry.label = label;
      manifest.add(std::move(entry));
    }
  }
  const int rates[3] = {4500, 5500, 7700};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<Label>(c);
    for (int i = 0; i < per_class; ++i) {
      for (int b = 0; b < bitrates; ++b) {
        ManifestEntry entry;
        const std::string parent =
            std::string(label_name(label)) + "/" + std::to_string(i);
        entry.id = parent + "#builtin_mdct@" + std::to_string(rates[b]);
        entry.path = entry.id + ".wav";
        entry.label = label;
        entry.provenance = Provenance::kCodec;
        entry.parent_id = parent;
        entry.codec_format = "builtin_mdct";
        entry.bitrate_bps = rates[b];
        manifest.add(std::move(entry));
      }
    }
  }
  return manifest;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("scan_y18 indexes class directories lexicographically") {
  oracles::TempDir dir("scan");
  for (const auto& [name, label] : default_class_dirs()) {
    std::filesystem::create_directories(dir.path() / name);
    for (const char* stem : {"c_third", "a_first", "b_second"}) {
      const auto clip = synth_pcg(label, 1, 1.0, 8000);
      pcgnet::audio::write_wav(clip, dir.path() / name / (std::string(stem) + ".wav"));
    }
  }
  std::ofstream(dir.path() / "N" / "notes.txt") << "ignore me";

  const ScanResult result = scan_y18(dir.path());
  CHECK(result.manifest.size() == 15);
  CHECK(result.skipped_non_wav == 1);
  // Per class, ids sorted by filename.
  const auto& entries = result.manifest.entries();
  CHECK(entries[0].id == "N/a_first");
  CHECK(entries[1].id == "N/b_second");
  CHECK(entries[2].id == "N/c_third");
  for (const auto& e : entries) {
    CHECK(e.is_original());
    CHECK(std::filesystem::exists(e.path));
  }
}

TEST_CASE("scan_y18 reports a missing class directory and what it found") {
  oracles::TempDir dir("scan");
  for (const char* name : {"N", "AS"}) {
    std::filesystem::create_directories(dir.path() / name);
    pcgnet::audio::write_wav(synth_pcg(Label::kNormal, 1, 1.0, 8000),
                             dir.path() / name / "x.wav");
  }
  CHECK_THROWS_WITH_AS(scan_y18(dir.path()), doctest::Contains("'MS'"),
                       std::runtime_error);
}

TEST_CASE("scan_y18 rejects an empty class directory by name") {
  oracles::TempDir dir("scan");
  for (const auto& [name, label] : default_class_dirs()) {
    std::filesystem::create_directories(dir.path() / name);
    if (label != Label::kMitralStenosis) {
      pcgnet::audio::write_wav(synth_pcg(label, 1, 1.0, 8000),
                               dir.path() / name / "x.wav");
    }
  }
  CHECK_THROWS_WITH_AS(scan_y18(dir.path()), doctest::Contains("'MS'"),
                       std::runtime_error);
}

TEST_CASE("make_folds deals 1000 originals into 10 balanced folds") {
  const Manifest manifest = synthetic_manifest(200, 0);
  const FoldPlan plan = make_folds(manifest, 10, 123);

  // Enumeration oracle: count ids per fold and per (fold, class).
  std::vector<int> fold_sizes(10, 0);
  std::vector<std::array<int, kNumClasses>> class_sizes(10, std::array<int, kNumClasses>{});
  for (const auto& e : manifest.entries()) {
    const int fold = plan.fold_of(e.id);
    REQUIRE(fold >= 0);
    REQUIRE(fold < 10);
    fold_sizes[static_cast<size_t>(fold)] += 1;
    class_sizes[static_cast<size_t>(fold)][static_cast<size_t>(e.label)] += 1;
  }
  for (int f = 0; f < 10; ++f) {
    CHECK(fold_sizes[static_cast<size_t>(f)] == 100);
    for (int c = 0; c < kNumClasses; ++c) {
      CHECK(class_sizes[static_cast<size_t>(f)][static_cast<size_t>(c)] == 20);
    }
  }
}

TEST_CASE("make_folds with k=2 and 2 per class puts one in each fold") {
  const Manifest manifest = synthetic_manifest(2, 0);
  const FoldPlan plan = make_folds(manifest, 2, 9);
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string a = std::string(label_name(static_cast<Label>(c))) + "/0";
    const std::string b = std::string(label_name(static_cast<Label>(c))) + "/1";
    CHECK(plan.fold_of(a) + plan.fold_of(b) == 1);  // one each of folds 0,1
  }
}

TEST_CASE("make_folds is deterministic for a fixed seed") {
  const Manifest manifest = synthetic_manifest(20, 0);
  const FoldPlan a = make_folds(manifest, 10, 7);
  const FoldPlan b = make_folds(manifest, 10, 7);
  CHECK(a.assignment == b.assignment);
  const FoldPlan c = make_folds(manifest, 10, 8);
  CHECK(a.assignment != c.assignment);
}

TEST_CASE("make_folds rejects classes with fewer originals than k") {
  const Manifest manifest = synthetic_manifest(3, 0);
  CHECK_THROWS_WITH_AS(make_folds(manifest, 4, 0), doctest::Contains("N"),
                       std::invalid_argument);
}

TEST_CASE("make_folds never assigns codec copies directly") {
  const Manifest manifest = synthetic_manifest(10, 3);
  const FoldPlan plan = make_folds(manifest, 5, 3);
  CHECK(plan.assignment.size() == 50);  // originals only
  for (const auto* copy : manifest.codec_copies()) {
    CHECK(plan.assignment.count(copy->id) == 0);
  }
}

TEST_CASE("fold_split sizes on a 4000-entry augmented manifest") {
  const Manifest manifest = synthetic_manifest(200, 3);  // 1000 + 3000
  REQUIRE(manifest.size() == 4000);
  const FoldPlan plan = make_folds(manifest, 10, 17);
  const FoldSplit split = fold_split(manifest, plan, 0, true);
  CHECK(split.train_ids.size() == 3600);
  CHECK(split.test_original_ids.size() == 100);
  CHECK(split.test_codec_ids.size() == 300);
}

TEST_CASE("fold_split on an unaugmented manifest has no codec test ids") {
  const Manifest manifest = synthetic_manifest(10, 0);
  const FoldPlan plan = make_folds(manifest, 5, 1);
  const FoldSplit split = fold_split(manifest, plan, 2, true);
  CHECK(split.test_codec_ids.empty());
  CHECK(split.train_ids.size() == 40);
  CHECK(split.test_original_ids.size() == 10);
}

TEST_CASE("fold_split without augmented training excludes codec ids from train") {
  const Manifest manifest = synthetic_manifest(10, 3);
  const FoldPlan plan = make_folds(manifest, 5, 1);
  const FoldSplit split = fold_split(manifest, plan, 0, false);
  CHECK(split.train_ids.size() == 40);
  for (const auto& id : split.train_ids) {
    CHECK(manifest.at(id).is_original());
  }
  CHECK(split.test_codec_ids.size() == 30);
}

TEST_CASE("fold splits partition the data with no leakage") {
  Rng rng(555);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const int per_class = k + static_cast<int>(rng.below(18));
    const int bitrates = static_cast<int>(rng.below(4));
    const Manifest manifest = synthetic_manifest(per_class, bitrates);
    const FoldPlan plan = make_folds(manifest, k, rng.next());

    // Stratification: per class, fold sizes differ by at most one.
    std::vector<std::array<int, kNumClasses>> class_sizes(
        static_cast<size_t>(k), std::array<int, kNumClasses>{});
    for (const auto* e : manifest.originals()) {
      class_sizes[static_cast<size_t>(plan.fold_of(e->id))]
                 [static_cast<size_t>(e->label)] += 1;
    }
    for (int c = 0; c < kNumClasses; ++c) {
      int lo = per_class, hi = 0;
      for (int f = 0; f < k; ++f) {
        lo = std::min(lo, class_sizes[static_cast<size_t>(f)][static_cast<size_t>(c)]);
        hi = std::max(hi, class_sizes[static_cast<size_t>(f)][static_cast<size_t>(c)]);
      }
      CHECK(hi - lo <= 1);
    }

    // Partition: test originals tile the originals exactly once.
    std::multiset<std::string> seen;
    for (int f = 0; f < k; ++f) {
      const FoldSplit split = fold_split(manifest, plan, f, true);
      seen.insert(split.test_original_ids.begin(),
                  split.test_original_ids.end());

      std::set<std::string> train(split.train_ids.begin(),
                                  split.train_ids.end());
      for (const auto& id : split.test_original_ids) {
        CHECK(train.count(id) == 0);
      }
      for (const auto& id : split.test_codec_ids) {
        CHECK(train.count(id) == 0);
      }
      // Leakage: the parent of every train codec copy trains as an original.
      for (const auto& id : split.train_ids) {
        const auto& entry = manifest.at(id);
        if (!entry.is_original()) {
          CHECK(train.count(entry.parent_id) == 1);
        }
      }
      // And no codec descendant of a test original is in train.
      for (const auto& id : split.test_original_ids) {
        for (const auto* copy : manifest.codec_copies()) {
          if (copy->parent_id == id) CHECK(train.count(copy->id) == 0);
        }
      }
    }
    CHECK(seen.size() == manifest.count_originals());
    for (const auto* e : manifest.originals()) {
      CHECK(seen.count(e->id) == 1);
    }
  }
}

TEST_CASE("synth_pcg is deterministic and label-sensitive") {
  const auto a = synth_pcg(Label::kNormal, 42, 2.0, 8000);
  const auto b = synth_pcg(Label::kNormal, 42, 2.0, 8000);
  CHECK(a.samples == b.samples);

  const auto c = synth_pcg(Label::kAorticStenosis, 42, 2.0, 8000);
  REQUIRE(c.samples.size() == a.samples.size());
  double diff = 0.0, norm = 0.0;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    diff += (a.samples[i] - c.samples[i]) * (a.samples[i] - c.samples[i]);
    norm += a.samples[i] * a.samples[i];
  }
  CHECK(std::sqrt(diff) > 0.1 * std::sqrt(norm));
}

TEST_CASE("synth_pcg normal clips repeat at the heart period") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto clip = synth_pcg(Label::kNormal, seed, 4.0, 8000);
    const auto peak = oracles::envelope_autocorr_peak(clip.samples, 8000, 0.6, 1.4);
    CHECK(peak.correlation > 0.25);
    CHECK(peak.lag_s > 0.85);
    CHECK(peak.lag_s < 1.15);
  }
}

TEST_CASE("synth_pcg respects duration, rate and peak normalization") {
  const auto clip = synth_pcg(Label::kMitralStenosis, 5, 2.5, 8000);
  CHECK(clip.samples.size() == 20000);
  CHECK(clip.sample_rate == 8000);
  float peak = 0.0f;
  for (float v : clip.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(0.9f).epsilon(1e-4));
  CHECK_THROWS_AS(synth_pcg(Label::kNormal, 1, 0.5, 8000),
                  std::invalid_argument);
  CHECK_THROWS_AS(synth_pcg(Label::kNormal, 1, 4.5, 8000),
                  std::invalid_argument);
}

TEST_CASE("load_batch stacks clips in id order") {
  oracles::TempDir dir("batch");
  Manifest manifest;
  std::vector<std::string> ids;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<Label>(c);
    const auto clip = synth_pcg(label, 50 + static_cast<uint64_t>(c), 2.0, 8000);
    const auto path = dir.path() / (std::string(label_name(label)) + ".wav");
    pcgnet::audio::write_wav(clip, path);
    ManifestEntry entry;
    entry.id = std::string(label_name(label)) + "/0";
    entry.path = path.string();
    entry.label = label;
    ids.push_back(entry.id);
    manifest.add(std::move(entry));
  }

  const Batch batch = load_batch(manifest, ids, 2000, 8000);
  CHECK(batch.inputs.shape() == std::vector<int>{5, 1, 8000});
  CHECK(batch.labels == std::vector<int>{0, 1, 2, 3, 4});

  const Batch single = load_batch(manifest, {ids[2]}, 2000, 4000);
  CHECK(single.inputs.shape() == std::vector<int>{1, 1, 4000});
  CHECK(single.labels == std::vector<int>{2});

  CHECK_THROWS_WITH_AS(load_batch(manifest, {"MS/404"}, 2000, 8000),
                       doctest::Contains("MS/404"), std::out_of_range);
  CHECK_THROWS_AS(load_batch(manifest, {}, 2000, 8000), std::invalid_argument);
}

TEST_CASE("manifest save/load round trip preserves entries") {
  oracles::TempDir dir("manifest");
  const Manifest manifest = synthetic_manifest(4, 2);
  const auto path = dir.path() / "m.jsonl";
  manifest.save(path);
  const Manifest loaded = Manifest::load(path);
  REQUIRE(loaded.size() == manifest.size());
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto& a = manifest.entries()[i];
    const auto& b = loaded.entries()[i];
    CHECK(a.id == b.id);
    CHECK(a.path == b.path);
    CHECK(a.label == b.label);
    CHECK(a.provenance == b.provenance);
    CHECK(a.parent_id == b.parent_id);
    CHECK(a.codec_format == b.codec_format);
    CHECK(a.bitrate_bps == b.bitrate_bps);
  }
}

TEST_CASE("manifest enforces codec parent invariants") {
  Manifest manifest;
  ManifestEntry original;
  original.id = "N/0";
  original.path = "n0.wav";
  original.label = Label::kNormal;
  manifest.add(original);

  ManifestEntry orphan;
  orphan.id = "AS/0#x@4500";
  orphan.path = "x.wav";
  orphan.label = Label::kAorticStenosis;
  orphan.provenance = Provenance::kCodec;
  orphan.parent_id = "AS/0";
  orphan.codec_format = "builtin_mdct";
  orphan.bitrate_bps = 4500;
  CHECK_THROWS_AS(manifest.add(orphan), std::invalid_argument);

  ManifestEntry wrong_label = orphan;
  wrong_label.parent_id = "N/0";
  CHECK_THROWS_AS(manifest.add(wrong_label), std::invalid_argument);

  ManifestEntry duplicate = original;
  CHECK_THROWS_AS(manifest.add(duplicate), std::invalid_argument);
}

}  // TEST_SUITE
