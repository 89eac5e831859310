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

#ifndef PCGNET_CODEC_HPP
#define PCGNET_CODEC_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcgnet/audio.hpp"
#include "pcgnet/manifest.hpp"

namespace pcgnet::codec {

enum class CodecFormat { kOpusOgg, kBuiltinMdct };

// One augmentation variant: format plus target bitrate.
struct CodecSpec {
  CodecFormat format = CodecFormat::kBuiltinMdct;
  int bitrate_bps = 0;
};

const char* codec_format_name(CodecFormat format);

// Default two-step transcode template (one command per line). Placeholders:
// {input} source wav, {temp} intermediate compressed file, {output} decoded
// wav, {bitrate} integer bits per second.
extern const char* kDefaultEncoderTemplate;

// If the template's program name carries no path separator and this
// environment variable is set, its value replaces the program name.
extern const char* kEncoderEnvVar;

// Runs the external encode/decode round trip (spec.format must be kOpusOgg,
// clip at 8000 Hz) and returns the decoded clip. Temporary files are created
// under work_dir and removed afterwards.
audio::AudioClip simulate_codec_external(const audio::AudioClip& clip,
                                         const CodecSpec& spec,
                                         const std::string& command_template,
                                         const std::filesystem::path& work_dir);

// In-process lossy codec stand-in (spec.format must be kBuiltinMdct).
//
// The signal is framed with a 512-sample MDCT (50% overlap, sine window).
// Each frame spends a budget of bitrate_bps * hop / sample_rate bits, at an
// accounting cost of 6 bits per kept coefficient; the largest-magnitude
// coefficients are kept and uniformly quantized (with seeded dither), the
// rest are zeroed. Deterministic for fixed (clip, spec, seed); output length
// equals input length. This is a model of low-bitrate smearing, not a
// standards-compliant codec.
audio::AudioClip simulate_codec_builtin(const audio::AudioClip& clip,
                                        const CodecSpec& spec, uint64_t seed);

// Log-spectral distance in dB: mean over STFT frames and bins of
// |20*log10((|X|+eps)/(|Y|+eps))| with eps = 1e-8, window 256, hop 128.
double spectral_distortion(const audio::AudioClip& original,
                           const audio::AudioClip& distorted);

enum class Engine { kExternal, kBuiltin };

struct AugmentOptions {
  std::vector<int> bitrates;
  Engine engine = Engine::kBuiltin;
  std::filesystem::path out_dir;
  std::string encoder_template;  // empty -> kDefaultEncoderTemplate
  uint64_t seed = 0;
  int jobs = 1;
};

// For each original entry and each bitrate, writes a distorted WAV under
// out_dir and appends a codec entry recording parent, format and bitrate.
// Existing valid outputs are reused, so interrupted runs can resume.
data::Manifest augment_manifest(const data::Manifest& manifest,
                                const AugmentOptions& options);

}  // namespace pcgnet::codec

#endif  // PCGNET_CODEC_HPP
