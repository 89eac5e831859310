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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <doctest.h>

#include "oracles.hpp"
#include "pcgnet/audio.hpp"
#include "pcgnet/rng.hpp"

using pcgnet::Rng;
using pcgnet::audio::AudioClip;
using pcgnet::audio::pad_or_crop;
using pcgnet::audio::read_wav;
using pcgnet::audio::resample;
using pcgnet::audio::write_wav;

namespace {

void append_u16(std::vector<unsigned char>& v, uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>(x >> 8));
}

void append_u32(std::vector<unsigned char>& v, uint32_t x) {
  append_u16(v, static_cast<uint16_t>(x & 0xffff));
  append_u16(v, static_cast<uint16_t>(x >> 16));
}

// Hand-rolled writer so read_wav is tested against independently built bytes.
void write_raw_wav(const std::filesystem::path& path, uint16_t format_code,
                   uint16_t channels, uint32_t rate, uint16_t bits,
                   const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> out;
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  append_u32(out, 36 + static_cast<uint32_t>(payload.size()));
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  append_u32(out, 16);
  append_u16(out, format_code);
  append_u16(out, channels);
  append_u32(out, rate);
  append_u32(out, rate * channels * bits / 8);
  append_u16(out, static_cast<uint16_t>(channels * bits / 8));
  append_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  append_u32(out, static_cast<uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("read_wav decodes mono 16-bit PCM") {
  oracles::TempDir dir("wav");
  std::vector<unsigned char> payload;
  for (int i = 0; i < 8000; ++i) {
    append_u16(payload, static_cast<uint16_t>(static_cast<int16_t>(i % 256)));
  }
  const auto path = dir.path() / "mono.wav";
  write_raw_wav(path, 1, 1, 8000, 16, payload);

  const AudioClip clip = read_wav(path);
  CHECK(clip.samples.size() == 8000);
  CHECK(clip.sample_rate == 8000);
  CHECK(clip.samples[1] == doctest::Approx(1.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("read_wav averages identical stereo channels to either channel") {
  oracles::TempDir dir("wav");
  std::vector<unsigned char> payload;
  for (int i = 0; i < 100; ++i) {
    const auto code = static_cast<uint16_t>(static_cast<int16_t>(100 * i - 5000));
    append_u16(payload, code);  // left
    append_u16(payload, code);  // right
  }
  const auto path = dir.path() / "stereo.wav";
  write_raw_wav(path, 1, 2, 8000, 16, payload);

  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 100);
  for (int i = 0; i < 100; ++i) {
    CHECK(clip.samples[static_cast<size_t>(i)] ==
          static_cast<float>(100 * i - 5000) / 32768.0f);
  }
}

TEST_CASE("sample code 32767 maps to 32767/32768") {
  oracles::TempDir dir("wav");
  std::vector<unsigned char> payload;
  append_u16(payload, 32767);
  append_u16(payload, static_cast<uint16_t>(static_cast<int16_t>(-32768)));
  const auto path = dir.path() / "extremes.wav";
  write_raw_wav(path, 1, 1, 8000, 16, payload);

  const AudioClip clip = read_wav(path);
  CHECK(clip.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
  CHECK(clip.samples[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("read_wav decodes 32-bit float") {
  oracles::TempDir dir("wav");
  std::vector<unsigned char> payload;
  const float values[3] = {0.25f, -0.5f, 1.0f};
  for (float v : values) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(payload, bits);
  }
  const auto path = dir.path() / "float.wav";
  write_raw_wav(path, 3, 1, 44100, 32, payload);

  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 3);
  CHECK(clip.sample_rate == 44100);
  CHECK(clip.samples[0] == 0.25f);
  CHECK(clip.samples[1] == -0.5f);
  CHECK(clip.samples[2] == 1.0f);
}

TEST_CASE("read_wav rejects unsupported encodings with the format code") {
  oracles::TempDir dir("wav");
  std::vector<unsigned char> payload;
  append_u16(payload, 0);
  const auto path = dir.path() / "adpcm.wav";
  write_raw_wav(path, 2, 1, 8000, 4, payload);
  CHECK_THROWS_WITH_AS(read_wav(path),
                       doctest::Contains("format code 2"), std::runtime_error);
}

TEST_CASE("read_wav rejects a zero-length data chunk") {
  oracles::TempDir dir("wav");
  const auto path = dir.path() / "empty.wav";
  write_raw_wav(path, 1, 1, 8000, 16, {});
  CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("zero-length"),
                       std::runtime_error);
}

TEST_CASE("read_wav reports missing files") {
  CHECK_THROWS_AS(read_wav("/nonexistent/clip.wav"), std::runtime_error);
}

TEST_CASE("write/read round trip stays within one quantization step") {
  oracles::TempDir dir("wav");
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.resize(500 + rng.below(2000));
    for (auto& v : clip.samples) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    const auto path = dir.path() / "roundtrip.wav";
    write_wav(clip, path);
    const AudioClip back = read_wav(path);
    REQUIRE(back.samples.size() == clip.samples.size());
    REQUIRE(back.sample_rate == clip.sample_rate);
    double max_err = 0.0;
    for (size_t i = 0; i < clip.samples.size(); ++i) {
      max_err = std::max(max_err, std::abs(static_cast<double>(back.samples[i]) -
                                           clip.samples[i]));
    }
    CHECK(max_err <= 1.0 / 32768.0);
  }
}

TEST_CASE("write_wav stores an all-zero clip as all zero codes") {
  oracles::TempDir dir("wav");
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(64, 0.0f);
  const auto path = dir.path() / "zero.wav";
  write_wav(clip, path);

  std::ifstream f(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 44 + 128);
  for (size_t i = 44; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("write_wav clips amplitude 2.0 to code 32767") {
  oracles::TempDir dir("wav");
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples = {2.0f, -3.0f};
  const auto path = dir.path() / "clipped.wav";
  write_wav(clip, path);

  std::ifstream f(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 48);
  const auto code0 = static_cast<int16_t>(bytes[44] | (bytes[45] << 8));
  const auto code1 = static_cast<int16_t>(bytes[46] | (bytes[47] << 8));
  CHECK(code0 == 32767);
  CHECK(code1 == -32768);
}

TEST_CASE("resample length arithmetic") {
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(8000, 0.1f);
  CHECK(resample(clip, 2000).samples.size() == 2000);
  CHECK(resample(clip, 2000).sample_rate == 2000);
  clip.samples.assign(4411, 0.1f);
  CHECK(resample(clip, 44100).samples.size() ==
        static_cast<size_t>(std::llround(4411.0 * 44100 / 8000)));
}

TEST_CASE("resample preserves constant signals in the interior") {
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(8000, 0.5f);
  const AudioClip out = resample(clip, 2000);
  REQUIRE(out.samples.size() == 2000);
  for (size_t i = 100; i + 100 < out.samples.size(); ++i) {
    CHECK(std::abs(out.samples[i] - 0.5f) < 1e-3f);
  }
}

TEST_CASE("resample keeps the dominant frequency bin (FFT-peak oracle)") {
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.resize(8000);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] =
        0.7f * std::sin(2.0f * static_cast<float>(M_PI) * 100.0f * i / 8000.0f);
  }
  CHECK(oracles::dominant_frequency_hz(clip.samples, 8000, 20, 999) == 100);

  const AudioClip down = resample(clip, 2000);
  CHECK(oracles::dominant_frequency_hz(down.samples, 2000, 20, 999) == 100);

  // Round trip back to the source rate preserves the peak as well.
  const AudioClip up = resample(down, 8000);
  CHECK(oracles::dominant_frequency_hz(up.samples, 8000, 20, 999) == 100);
}

TEST_CASE("resample rejects non-positive target rates") {
  AudioClip clip;
  clip.sample_rate = 8000;
  clip.samples.assign(100, 0.0f);
  CHECK_THROWS_AS(resample(clip, 0), std::invalid_argument);
  CHECK_THROWS_AS(resample(clip, -1), std::invalid_argument);
}

TEST_CASE("pad_or_crop pads with trailing zeros") {
  AudioClip clip;
  clip.sample_rate = 2000;
  clip.samples.resize(2000);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = static_cast<float>(i) / 2000.0f;
  }
  const AudioClip out = pad_or_crop(clip, 8000);
  REQUIRE(out.samples.size() == 8000);
  for (size_t i = 0; i < 2000; ++i) CHECK(out.samples[i] == clip.samples[i]);
  for (size_t i = 2000; i < 8000; ++i) CHECK(out.samples[i] == 0.0f);
}

TEST_CASE("pad_or_crop is the identity at the target length") {
  AudioClip clip;
  clip.sample_rate = 2000;
  clip.samples.assign(8000, 0.25f);
  const AudioClip out = pad_or_crop(clip, 8000);
  CHECK(out.samples == clip.samples);
  CHECK(out.sample_rate == clip.sample_rate);
}

TEST_CASE("pad_or_crop truncates at the end") {
  AudioClip clip;
  clip.sample_rate = 2000;
  clip.samples.resize(9000);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = static_cast<float>(i);
  }
  const AudioClip out = pad_or_crop(clip, 8000);
  REQUIRE(out.samples.size() == 8000);
  for (size_t i = 0; i < 8000; ++i) CHECK(out.samples[i] == clip.samples[i]);
}

TEST_CASE("pad_or_crop output length always equals the target") {
  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.assign(1 + rng.below(5000), 0.1f);
    const size_t target = 1 + rng.below(5000);
    CHECK(pad_or_crop(clip, target).samples.size() == target);
  }
}

}  // TEST_SUITE
