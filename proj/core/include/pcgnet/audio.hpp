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

#ifndef PCGNET_AUDIO_HPP
#define PCGNET_AUDIO_HPP

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pcgnet::audio {

// A mono sampled waveform. Amplitudes are nominally in [-1, 1]; values
// outside that range are clipped when written to disk, not before.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;  // Hz

  size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Reads a RIFF/WAVE file. Accepts 16-bit integer PCM (format code 1) and
// 32-bit float (format code 3), mono or stereo; stereo is averaged per
// sample. 16-bit samples map to amplitude via s / 32768.
AudioClip read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM little-endian at clip.sample_rate. Amplitudes are
// clipped to [-1, 1] and rounded to the nearest integer code.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

// Windowed-sinc polyphase resampler (Kaiser window, cutoff
// 0.45 * min(source_rate, target_rate)). Output length is
// round(len * target_rate / source_rate), clamped to at least one sample.
AudioClip resample(const AudioClip& clip, int target_rate);

// Zero-pads at the end or truncates at the end to exactly target_len samples.
AudioClip pad_or_crop(const AudioClip& clip, size_t target_len);

// Test instrumentation: observer called with the path of every file read by
// read_wav. Pass nullptr to clear. Thread-safe.
void set_read_observer(std::function<void(const std::string&)> observer);

}  // namespace pcgnet::audio

#endif  // PCGNET_AUDIO_HPP
