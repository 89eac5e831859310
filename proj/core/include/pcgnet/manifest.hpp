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

#ifndef PCGNET_MANIFEST_HPP
#define PCGNET_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcgnet::data {

// The five heart-sound classes: normal plus four murmur types.
enum class Label : int {
  kNormal = 0,              // N
  kAorticStenosis = 1,      // AS
  kMitralStenosis = 2,      // MS
  kMitralRegurgitation = 3, // MR
  kMitralValveProlapse = 4, // MVP
};

inline constexpr int kNumClasses = 5;

const char* label_name(Label label);
std::optional<Label> label_from_name(std::string_view name);

enum class Provenance { kOriginal, kCodec };

struct ManifestEntry {
  std::string id;
  std::string path;
  Label label = Label::kNormal;
  Provenance provenance = Provenance::kOriginal;
  // Set only for codec copies.
  std::string parent_id;
  std::string codec_format;
  int bitrate_bps = 0;

  bool is_original() const { return provenance == Provenance::kOriginal; }
};

// Dataset index. Entries are ordered; codec copies must be added after their
// parent and carry the parent's label.
class Manifest {
 public:
  void add(ManifestEntry entry);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const;
  const ManifestEntry& at(const std::string& id) const;

  std::vector<const ManifestEntry*> originals() const;
  std::vector<const ManifestEntry*> codec_copies() const;
  size_t count_originals() const;

  // Line-delimited JSON, one entry per line (fields: id, path, label,
  // provenance, parent_id, codec_format, bitrate_bps).
  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace pcgnet::data

#endif  // PCGNET_MANIFEST_HPP
