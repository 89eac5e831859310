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

#include "pcgnet/codec.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pcgnet/fft.hpp"
#include "pcgnet/rng.hpp"

namespace pcgnet::codec {

const char* kDefaultEncoderTemplate =
    "ffmpeg -y -loglevel error -i {input} -c:a libopus -b:a {bitrate} {temp}\n"
    "ffmpeg -y -loglevel error -i {temp} -ar 8000 {output}";

const char* kEncoderEnvVar = "PCGNET_ENCODER";

const char* codec_format_name(CodecFormat format) {
  return format == CodecFormat::kOpusOgg ? "opus_ogg" : "builtin_mdct";
}

namespace {

constexpr int kFrameLen = 512;
constexpr int kHop = kFrameLen / 2;
constexpr double kBitsPerCoefficient = 6.0;

std::string replace_all(std::string s, const std::string& needle,
                        const std::string& value) {
  size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    s.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return s;
}

// Applies kEncoderEnvVar to the program token when the token names no path.
std::string apply_encoder_env(const std::string& command) {
  const char* encoder = std::getenv(kEncoderEnvVar);
  if (encoder == nullptr || *encoder == '\0') return command;
  const size_t end = command.find_first_of(" \t");
  const std::string program = command.substr(0, end);
  if (program.find('/') != std::string::npos) return command;
  return std::string(encoder) +
         (end == std::string::npos ? "" : command.substr(end));
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("failed to spawn command: " + command);
  }
  char buf[4096];
  while (size_t n = std::fread(buf, 1, sizeof(buf), pipe)) {
    result.output.append(buf, n);
    if (n < sizeof(buf)) break;
  }
  const int status = pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  }
  return result;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.find_first_not_of(" \t") != std::string::npos) {
      lines.push_back(line);
    }
  }
  return lines;
}

std::string sanitize_for_filename(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' ||
          c == '_' || c == '.')) {
      c = '_';
    }
  }
  return out;
}

// MDCT basis evaluation for a 512-sample frame: 256 coefficients.
// Direct O(N^2) evaluation; frames are short enough that this stays cheap.
struct MdctTables {
  // cos_table[k][n] = cos(pi/hop * (n + 0.5 + hop/2) * (k + 0.5))
  std::vector<double> cos_table;  // kHop * kFrameLen
  std::vector<double> window;     // sine window

  MdctTables() {
    cos_table.resize(static_cast<size_t>(kHop) * kFrameLen);
    window.resize(kFrameLen);
    for (int n = 0; n < kFrameLen; ++n) {
      window[static_cast<size_t>(n)] =
          std::sin(M_PI * (n + 0.5) / kFrameLen);
    }
    for (int k = 0; k < kHop; ++k) {
      for (int n = 0; n < kFrameLen; ++n) {
        cos_table[static_cast<size_t>(k) * kFrameLen + n] =
            std::cos(M_PI / kHop * (n + 0.5 + kHop / 2.0) * (k + 0.5));
      }
    }
  }
};

const MdctTables& mdct_tables() {
  static const MdctTables tables;
  return tables;
}

}  // namespace

audio::AudioClip simulate_codec_builtin(const audio::AudioClip& clip,
                                        const CodecSpec& spec, uint64_t seed) {
  if (spec.format != CodecFormat::kBuiltinMdct) {
    throw std::invalid_argument(
        "simulate_codec_builtin requires format builtin_mdct");
  }
  if (spec.bitrate_bps <= 0) {
    throw std::invalid_argument("codec bitrate must be positive");
  }
  if (clip.sample_rate <= 0) {
    throw std::invalid_argument("clip has no sample rate");
  }

  const auto& tables = mdct_tables();
  const int64_t len = static_cast<int64_t>(clip.samples.size());
  // Frames cover [0, padded) at hop spacing; the input sits at offset kHop so
  // every real sample lands in exactly two frames and overlap-add
  // reconstructs it.
  const int64_t num_frames = (len + kHop - 1) / kHop + 1;
  const int64_t padded = (num_frames - 1) * kHop + kFrameLen;
  std::vector<double> input(static_cast<size_t>(padded), 0.0);
  for (int64_t i = 0; i < len; ++i) {
    input[static_cast<size_t>(kHop + i)] = clip.samples[static_cast<size_t>(i)];
  }
  std::vector<double> output(static_cast<size_t>(padded), 0.0);

  const double bits_per_frame =
      static_cast<double>(spec.bitrate_bps) * kHop / clip.sample_rate;
  const int keep =
      std::min<int>(kHop, static_cast<int>(bits_per_frame / kBitsPerCoefficient));

  std::vector<double> coeffs(kHop);
  std::vector<int> order(kHop);
  for (int64_t frame = 0; frame < num_frames; ++frame) {
    const double* x = input.data() + frame * kHop;

    for (int k = 0; k < kHop; ++k) {
      const double* basis = tables.cos_table.data() +
                            static_cast<size_t>(k) * kFrameLen;
      double acc = 0.0;
      for (int n = 0; n < kFrameLen; ++n) {
        acc += tables.window[static_cast<size_t>(n)] * x[n] * basis[n];
      }
      coeffs[static_cast<size_t>(k)] = acc;
    }

    // Keep the largest-magnitude coefficients within the frame budget.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(coeffs[static_cast<size_t>(a)]) >
             std::abs(coeffs[static_cast<size_t>(b)]);
    });
    double peak = 0.0;
    for (double c : coeffs) peak = std::max(peak, std::abs(c));
    std::vector<bool> kept(kHop, false);
    for (int i = 0; i < keep; ++i) {
      kept[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
    }

    Rng dither(mix_seed(seed, static_cast<uint64_t>(frame)));
    const double step = peak > 0.0 ? peak / 64.0 : 0.0;
    for (int k = 0; k < kHop; ++k) {
      if (!kept[static_cast<size_t>(k)] || step == 0.0) {
        coeffs[static_cast<size_t>(k)] = kept[static_cast<size_t>(k)]
                                             ? coeffs[static_cast<size_t>(k)]
                                             : 0.0;
        continue;
      }
      const double d = dither.uniform(-0.25, 0.25);
      coeffs[static_cast<size_t>(k)] =
          step * std::round(coeffs[static_cast<size_t>(k)] / step + d);
    }

    // Inverse transform and overlap-add.
    double* y = output.data() + frame * kHop;
    for (int n = 0; n < kFrameLen; ++n) {
      double acc = 0.0;
      for (int k = 0; k < kHop; ++k) {
        acc += coeffs[static_cast<size_t>(k)] *
               tables.cos_table[static_cast<size_t>(k) * kFrameLen + n];
      }
      y[n] += (2.0 / kHop) * tables.window[static_cast<size_t>(n)] * acc;
    }
  }

  audio::AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(static_cast<size_t>(len));
  for (int64_t i = 0; i < len; ++i) {
    out.samples[static_cast<size_t>(i)] =
        static_cast<float>(output[static_cast<size_t>(kHop + i)]);
  }
  return out;
}

audio::AudioClip simulate_codec_external(
    const audio::AudioClip& clip, const CodecSpec& spec,
    const std::string& command_template,
    const std::filesystem::path& work_dir) {
  if (spec.format != CodecFormat::kOpusOgg) {
    throw std::invalid_argument(
        "simulate_codec_external requires format opus_ogg");
  }
  if (spec.bitrate_bps <= 0) {
    throw std::invalid_argument("codec bitrate must be positive");
  }
  const std::string tpl =
      command_template.empty() ? kDefaultEncoderTemplate : command_template;

  std::filesystem::create_directories(work_dir);
  static std::atomic<uint64_t> counter{0};
  const std::string tag = "codec_" + std::to_string(counter.fetch_add(1));
  const auto input_path = work_dir / (tag + "_in.wav");
  const auto temp_path = work_dir / (tag + "_tmp.ogg");
  const auto output_path = work_dir / (tag + "_out.wav");
  const auto cleanup = [&] {
    std::error_code ec;
    std::filesystem::remove(input_path, ec);
    std::filesystem::remove(temp_path, ec);
    std::filesystem::remove(output_path, ec);
  };

  audio::write_wav(clip, input_path);

  const auto lines = split_lines(tpl);
  if (lines.empty()) {
    cleanup();
    throw std::invalid_argument("encoder command template is empty");
  }
  for (const auto& line : lines) {
    std::string cmd = replace_all(line, "{input}", input_path.string());
    cmd = replace_all(cmd, "{temp}", temp_path.string());
    cmd = replace_all(cmd, "{output}", output_path.string());
    cmd = replace_all(cmd, "{bitrate}", std::to_string(spec.bitrate_bps));
    cmd = apply_encoder_env(cmd);

    const CommandResult result = run_command(cmd);
    if (result.exit_code == 127 || result.exit_code == 126) {
      cleanup();
      throw std::runtime_error(
          "encoder tool not found or not executable; set " +
          std::string(kEncoderEnvVar) +
          " or adjust the command template: " + tpl);
    }
    if (result.exit_code != 0) {
      cleanup();
      throw std::runtime_error("encoder command failed (exit " +
                               std::to_string(result.exit_code) + "): " + cmd +
                               "\n" + result.output);
    }
  }

  audio::AudioClip decoded;
  try {
    decoded = audio::read_wav(output_path);
  } catch (const std::exception& e) {
    cleanup();
    throw std::runtime_error(std::string("decoded file unreadable: ") +
                             e.what());
  }
  cleanup();
  return decoded;
}

double spectral_distortion(const audio::AudioClip& original,
                           const audio::AudioClip& distorted) {
  if (original.sample_rate != distorted.sample_rate) {
    throw std::invalid_argument("spectral_distortion: sample rate mismatch");
  }
  if (original.samples.size() != distorted.samples.size()) {
    throw std::invalid_argument("spectral_distortion: length mismatch");
  }

  constexpr size_t kWindow = 256;
  constexpr size_t kStep = 128;
  constexpr double kEps = 1e-8;

  std::vector<float> a(original.samples);
  std::vector<float> b(distorted.samples);
  if (a.size() < kWindow) {
    a.resize(kWindow, 0.0f);
    b.resize(kWindow, 0.0f);
  }

  std::vector<double> hann(kWindow);
  for (size_t n = 0; n < kWindow; ++n) {
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / kWindow);
  }

  std::vector<float> wa(kWindow), wb(kWindow);
  double total = 0.0;
  size_t count = 0;
  for (size_t off = 0; off + kWindow <= a.size(); off += kStep) {
    for (size_t n = 0; n < kWindow; ++n) {
      wa[n] = static_cast<float>(a[off + n] * hann[n]);
      wb[n] = static_cast<float>(b[off + n] * hann[n]);
    }
    const auto ma = fft::real_magnitude(wa.data(), kWindow);
    const auto mb = fft::real_magnitude(wb.data(), kWindow);
    for (size_t k = 0; k < ma.size(); ++k) {
      total += std::abs(20.0 * std::log10((ma[k] + kEps) / (mb[k] + kEps)));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

data::Manifest augment_manifest(const data::Manifest& manifest,
                                const AugmentOptions& options) {
  for (const auto& e : manifest.entries()) {
    if (!e.is_original()) {
      throw std::invalid_argument(
          "augment_manifest: manifest already contains codec entry " + e.id);
    }
  }
  for (int b : options.bitrates) {
    if (b <= 0) {
      throw std::invalid_argument("augment_manifest: non-positive bitrate");
    }
  }

  data::Manifest out;
  for (const auto& e : manifest.entries()) out.add(e);
  if (options.bitrates.empty()) return out;

  std::filesystem::create_directories(options.out_dir);
  const CodecFormat format = options.engine == Engine::kBuiltin
                                 ? CodecFormat::kBuiltinMdct
                                 : CodecFormat::kOpusOgg;
  const char* format_name = codec_format_name(format);

  const auto& originals = manifest.entries();
  const size_t per_original = options.bitrates.size();
  const size_t total = originals.size() * per_original;
  std::vector<data::ManifestEntry> produced(total);
  std::vector<std::string> failures;
  std::mutex failures_mutex;
  std::atomic<size_t> cursor{0};

  auto worker = [&]() {
    while (true) {
      const size_t idx = cursor.fetch_add(1);
      if (idx >= total) return;
      {
        std::lock_guard<std::mutex> lock(failures_mutex);
        if (!failures.empty()) return;
      }
      const auto& parent = originals[idx / per_original];
      const int bitrate = options.bitrates[idx % per_original];
      data::ManifestEntry entry;
      entry.id = parent.id + "#" + format_name + "@" + std::to_string(bitrate);
      entry.label = parent.label;
      entry.provenance = data::Provenance::kCodec;
      entry.parent_id = parent.id;
      entry.codec_format = format_name;
      entry.bitrate_bps = bitrate;
      const auto out_path =
          options.out_dir / (sanitize_for_filename(parent.id) + "_" +
                             format_name + "_" + std::to_string(bitrate) +
                             ".wav");
      entry.path = out_path.string();

      try {
        bool reuse = false;
        if (std::filesystem::exists(out_path)) {
          try {
            audio::read_wav(out_path);
            reuse = true;  // resumable: existing valid output
          } catch (const std::exception&) {
            reuse = false;
          }
        }
        if (!reuse) {
          const audio::AudioClip clip = audio::read_wav(parent.path);
          CodecSpec spec{format, bitrate};
          audio::AudioClip distorted;
          if (options.engine == Engine::kBuiltin) {
            distorted = simulate_codec_builtin(
                clip, spec, mix_seed(options.seed, static_cast<uint64_t>(idx)));
          } else {
            distorted = simulate_codec_external(
                clip, spec, options.encoder_template, options.out_dir / "tmp");
          }
          audio::write_wav(distorted, out_path);
        }
        produced[idx] = std::move(entry);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.push_back("augmenting " + parent.id + " at " +
                           std::to_string(bitrate) + " bps: " + e.what());
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(jobs));
    for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  if (!failures.empty()) {
    throw std::runtime_error(failures.front());
  }
  for (auto& entry : produced) {
    out.add(std::move(entry));
  }
  return out;
}

}  // namespace pcgnet::codec
