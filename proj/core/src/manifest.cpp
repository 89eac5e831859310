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

#include "pcgnet/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pcgnet::data {

namespace {
constexpr const char* kLabelNames[kNumClasses] = {"N", "AS", "MS", "MR", "MVP"};
}

const char* label_name(Label label) {
  return kLabelNames[static_cast<int>(label)];
}

std::optional<Label> label_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (name == kLabelNames[i]) return static_cast<Label>(i);
  }
  return std::nullopt;
}

void Manifest::add(ManifestEntry entry) {
  if (entry.id.empty()) {
    throw std::invalid_argument("manifest entry has empty id");
  }
  if (index_.count(entry.id) != 0) {
    throw std::invalid_argument("duplicate manifest id: " + entry.id);
  }
  if (entry.provenance == Provenance::kCodec) {
    if (entry.parent_id.empty()) {
      throw std::invalid_argument("codec entry " + entry.id +
                                  " has no parent_id");
    }
    auto it = index_.find(entry.parent_id);
    if (it == index_.end()) {
      throw std::invalid_argument("codec entry " + entry.id +
                                  " references unknown parent " +
                                  entry.parent_id);
    }
    const ManifestEntry& parent = entries_[it->second];
    if (!parent.is_original()) {
      throw std::invalid_argument("codec entry " + entry.id +
                                  " has non-original parent " +
                                  entry.parent_id);
    }
    if (parent.label != entry.label) {
      throw std::invalid_argument("codec entry " + entry.id +
                                  " label differs from parent " +
                                  entry.parent_id);
    }
    if (entry.bitrate_bps <= 0) {
      throw std::invalid_argument("codec entry " + entry.id +
                                  " has non-positive bitrate");
    }
  }
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
}

bool Manifest::contains(const std::string& id) const {
  return index_.count(id) != 0;
}

const ManifestEntry& Manifest::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::out_of_range("manifest has no entry with id: " + id);
  }
  return entries_[it->second];
}

std::vector<const ManifestEntry*> Manifest::originals() const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (e.is_original()) out.push_back(&e);
  }
  return out;
}

std::vector<const ManifestEntry*> Manifest::codec_copies() const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (!e.is_original()) out.push_back(&e);
  }
  return out;
}

size_t Manifest::count_originals() const {
  size_t n = 0;
  for (const auto& e : entries_) {
    if (e.is_original()) ++n;
  }
  return n;
}

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open manifest: " + path.string());
  }
  Manifest manifest;
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("manifest " + path.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    ManifestEntry entry;
    entry.id = j.at("id").get<std::string>();
    entry.path = j.at("path").get<std::string>();
    const auto label = label_from_name(j.at("label").get<std::string>());
    if (!label) {
      throw std::runtime_error("manifest " + path.string() + " line " +
                               std::to_string(line_no) + ": unknown label " +
                               j.at("label").get<std::string>());
    }
    entry.label = *label;
    const auto provenance = j.at("provenance").get<std::string>();
    if (provenance == "original") {
      entry.provenance = Provenance::kOriginal;
    } else if (provenance == "codec") {
      entry.provenance = Provenance::kCodec;
      entry.parent_id = j.at("parent_id").get<std::string>();
      entry.codec_format = j.at("codec_format").get<std::string>();
      entry.bitrate_bps = j.at("bitrate_bps").get<int>();
    } else {
      throw std::runtime_error("manifest " + path.string() + " line " +
                               std::to_string(line_no) +
                               ": unknown provenance " + provenance);
    }
    manifest.add(std::move(entry));
  }
  return manifest;
}

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot write manifest: " + path.string());
  }
  for (const auto& e : entries_) {
    nlohmann::json j;
    j["id"] = e.id;
    j["path"] = e.path;
    j["label"] = label_name(e.label);
    j["provenance"] = e.is_original() ? "original" : "codec";
    if (!e.is_original()) {
      j["parent_id"] = e.parent_id;
      j["codec_format"] = e.codec_format;
      j["bitrate_bps"] = e.bitrate_bps;
    }
    f << j.dump() << "\n";
  }
  if (!f) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace pcgnet::data
