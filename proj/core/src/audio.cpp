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

#include "pcgnet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace pcgnet::audio {

namespace {

std::mutex g_observer_mutex;
std::function<void(const std::string&)> g_read_observer;

void notify_read(const std::filesystem::path& path) {
  std::lock_guard<std::mutex> lock(g_observer_mutex);
  if (g_read_observer) g_read_observer(path.string());
}

uint16_t le16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t le32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put32(std::vector<unsigned char>& out, uint32_t v) {
  put16(out, static_cast<uint16_t>(v & 0xffff));
  put16(out, static_cast<uint16_t>((v >> 16) & 0xffff));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return sum;
}

}  // namespace

void set_read_observer(std::function<void(const std::string&)> observer) {
  std::lock_guard<std::mutex> lock(g_observer_mutex);
  g_read_observer = std::move(observer);
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open WAV file: " + path.string());
  }

  unsigned char header[12];
  f.read(reinterpret_cast<char*>(header), 12);
  if (!f || std::memcmp(header, "RIFF", 4) != 0 ||
      std::memcmp(header + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  uint16_t format_code = 0, channels = 0, bits_per_sample = 0;
  uint32_t sample_rate = 0;
  std::vector<unsigned char> payload;

  unsigned char chunk_header[8];
  while (f.read(reinterpret_cast<char*>(chunk_header), 8)) {
    const uint32_t chunk_size = le32(chunk_header + 4);
    if (std::memcmp(chunk_header, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        throw std::runtime_error("malformed fmt chunk in " + path.string());
      }
      std::vector<unsigned char> fmt(chunk_size);
      f.read(reinterpret_cast<char*>(fmt.data()), chunk_size);
      if (!f) throw std::runtime_error("truncated fmt chunk in " + path.string());
      format_code = le16(fmt.data());
      channels = le16(fmt.data() + 2);
      sample_rate = le32(fmt.data() + 4);
      bits_per_sample = le16(fmt.data() + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk_header, "data", 4) == 0) {
      payload.resize(chunk_size);
      f.read(reinterpret_cast<char*>(payload.data()), chunk_size);
      if (!f) throw std::runtime_error("truncated data chunk in " + path.string());
      break;
    } else {
      f.seekg(chunk_size, std::ios::cur);
    }
    if (chunk_size % 2 != 0) f.seekg(1, std::ios::cur);  // RIFF word padding
  }

  if (!have_fmt) {
    throw std::runtime_error("missing fmt chunk in " + path.string());
  }
  if (payload.empty()) {
    throw std::runtime_error("zero-length data chunk in " + path.string());
  }
  if (channels < 1 || channels > 2) {
    throw std::runtime_error("unsupported channel count " +
                             std::to_string(channels) + " in " + path.string());
  }
  if (sample_rate == 0) {
    throw std::runtime_error("invalid sample rate 0 in " + path.string());
  }

  const bool pcm16 = format_code == kFormatPcm && bits_per_sample == 16;
  const bool float32 = format_code == kFormatFloat && bits_per_sample == 32;
  if (!pcm16 && !float32) {
    throw std::runtime_error(
        "unsupported WAV encoding in " + path.string() + ": format code " +
        std::to_string(format_code) + ", " + std::to_string(bits_per_sample) +
        " bits per sample (expected PCM/16 or float/32)");
  }

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t frames = payload.size() / frame_bytes;
  if (frames == 0) {
    throw std::runtime_error("zero-length data chunk in " + path.string());
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    float acc = 0.0f;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = payload.data() + i * frame_bytes +
                               static_cast<size_t>(c) * bytes_per_sample;
      if (pcm16) {
        const int16_t s = static_cast<int16_t>(le16(p));
        acc += static_cast<float>(s) / 32768.0f;
      } else {
        float v;
        uint32_t bits = le32(p);
        std::memcpy(&v, &bits, 4);
        acc += v;
      }
    }
    clip.samples[i] = channels == 2 ? acc * 0.5f : acc;
  }

  notify_read(path);
  return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);

  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);  // mono
  put32(out, static_cast<uint32_t>(clip.sample_rate));
  put32(out, static_cast<uint32_t>(clip.sample_rate) * 2);  // byte rate
  put16(out, 2);                                            // block align
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);

  for (float s : clip.samples) {
    double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    long code = std::lround(clipped * 32768.0);
    code = std::clamp(code, -32768l, 32767l);
    put16(out, static_cast<uint16_t>(static_cast<int16_t>(code)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) {
    throw std::invalid_argument("resample: target rate must be positive");
  }
  if (clip.sample_rate <= 0) {
    throw std::invalid_argument("resample: clip has no sample rate");
  }
  if (clip.sample_rate == target_rate) return clip;

  const int src = clip.sample_rate;
  const int dst = target_rate;
  const int64_t in_len = static_cast<int64_t>(clip.samples.size());
  int64_t out_len = std::llround(static_cast<double>(in_len) * dst / src);
  out_len = std::max<int64_t>(out_len, 1);

  const int g = std::gcd(src, dst);
  const int64_t up = dst / g;    // number of distinct fractional phases
  const int64_t down = src / g;

  // Kernel: sinc lowpass at fc, Kaiser window, 16 zero crossings per side.
  const double fc = 0.45 * std::min(src, dst);
  const double beta = 9.0;
  const int zeros = 16;
  const double half_width = zeros * src / (2.0 * fc);  // in source samples
  const int taps_half = static_cast<int>(std::ceil(half_width));
  const int taps = 2 * taps_half + 1;
  const double i0_beta = bessel_i0(beta);

  // weights[p][k + taps_half] applies to x[n0 - k] where the output sample
  // sits p/up source samples after input sample n0. Each phase is normalized
  // to unit DC gain so constants pass through exactly.
  std::vector<std::vector<double>> weights(static_cast<size_t>(up));
  for (int64_t p = 0; p < up; ++p) {
    auto& w = weights[static_cast<size_t>(p)];
    w.resize(static_cast<size_t>(taps));
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double sum = 0.0;
    for (int k = -taps_half; k <= taps_half; ++k) {
      const double t = (frac + k) / src;  // seconds from the output point
      const double window_pos = (frac + k) / half_width;
      double v = 0.0;
      if (std::abs(window_pos) <= 1.0) {
        const double arg = 2.0 * fc * t;
        const double sinc =
            arg == 0.0 ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
        const double kaiser =
            bessel_i0(beta * std::sqrt(1.0 - window_pos * window_pos)) /
            i0_beta;
        v = (2.0 * fc / src) * sinc * kaiser;
      }
      w[static_cast<size_t>(k + taps_half)] = v;
      sum += v;
    }
    for (auto& v : w) v /= sum;
  }

  AudioClip out;
  out.sample_rate = dst;
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t j = 0; j < out_len; ++j) {
    const int64_t num = j * down;      // position in source samples: num / up
    const int64_t n0 = num / up;
    const int64_t phase = num % up;
    const auto& w = weights[static_cast<size_t>(phase)];
    double acc = 0.0;
    for (int k = -taps_half; k <= taps_half; ++k) {
      const int64_t i = n0 - k;
      if (i < 0 || i >= in_len) continue;
      acc += w[static_cast<size_t>(k + taps_half)] *
             static_cast<double>(clip.samples[static_cast<size_t>(i)]);
    }
    out.samples[static_cast<size_t>(j)] = static_cast<float>(acc);
  }
  return out;
}

AudioClip pad_or_crop(const AudioClip& clip, size_t target_len) {
  if (target_len == 0) {
    throw std::invalid_argument("pad_or_crop: target length must be positive");
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(target_len, 0.0f);
  const size_t n = std::min(target_len, clip.samples.size());
  std::copy_n(clip.samples.begin(), n, out.samples.begin());
  return out;
}

}  // namespace pcgnet::audio
