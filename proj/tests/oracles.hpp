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

// Independent reference implementations used to check the production code.
// Everything here is deliberately naive (triple loops, direct DFT) and must
// not share code with the library paths it verifies.

#ifndef PCGNET_TESTS_ORACLES_HPP
#define PCGNET_TESTS_ORACLES_HPP

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oracles {

// Valid cross-correlation, direct triple loop.
inline std::vector<double> naive_conv1d(const std::vector<double>& x,
                                        const std::vector<double>& w,
                                        const std::vector<double>& b, int batch,
                                        int cin, int cout, int len, int kernel,
                                        int stride) {
  const int lout = (len - kernel) / stride + 1;
  std::vector<double> out(static_cast<size_t>(batch) * cout * lout, 0.0);
  for (int n = 0; n < batch; ++n) {
    for (int co = 0; co < cout; ++co) {
      for (int t = 0; t < lout; ++t) {
        double acc = b[static_cast<size_t>(co)];
        for (int ci = 0; ci < cin; ++ci) {
          for (int k = 0; k < kernel; ++k) {
            acc += x[(static_cast<size_t>(n) * cin + ci) * len + t * stride + k] *
                   w[(static_cast<size_t>(co) * cin + ci) * kernel + k];
          }
        }
        out[(static_cast<size_t>(n) * cout + co) * lout + t] = acc;
      }
    }
  }
  return out;
}

inline std::vector<double> naive_linear(const std::vector<double>& x,
                                        const std::vector<double>& w,
                                        const std::vector<double>& b, int batch,
                                        int features, int out_dim) {
  std::vector<double> out(static_cast<size_t>(batch) * out_dim, 0.0);
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = b[static_cast<size_t>(o)];
      for (int f = 0; f < features; ++f) {
        acc += x[static_cast<size_t>(n) * features + f] *
               w[static_cast<size_t>(o) * features + f];
      }
      out[static_cast<size_t>(n) * out_dim + o] = acc;
    }
  }
  return out;
}

inline std::vector<double> naive_maxpool1d(const std::vector<double>& x,
                                           int rows, int len, int window) {
  const int lout = len / window;
  std::vector<double> out(static_cast<size_t>(rows) * lout);
  for (int r = 0; r < rows; ++r) {
    for (int t = 0; t < lout; ++t) {
      double best = x[static_cast<size_t>(r) * len + t * window];
      for (int k = 1; k < window; ++k) {
        best = std::max(best, x[static_cast<size_t>(r) * len + t * window + k]);
      }
      out[static_cast<size_t>(r) * lout + t] = best;
    }
  }
  return out;
}

// Signal power at one frequency via the Goertzel recurrence.
inline double goertzel_power(const std::vector<float>& x, int rate,
                             double freq_hz) {
  const double w = 2.0 * M_PI * freq_hz / rate;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (float v : x) {
    s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

// Dominant frequency over an integer-Hz grid, excluding DC.
inline int dominant_frequency_hz(const std::vector<float>& x, int rate,
                                 int lo_hz, int hi_hz) {
  int best = lo_hz;
  double best_power = -1.0;
  for (int f = lo_hz; f <= hi_hz; ++f) {
    const double p = goertzel_power(x, rate, f);
    if (p > best_power) {
      best_power = p;
      best = f;
    }
  }
  return best;
}

// Lag (seconds) of the strongest envelope autocorrelation peak within
// [lo_s, hi_s], plus the normalized correlation at that lag.
struct AutocorrPeak {
  double lag_s = 0.0;
  double correlation = 0.0;
};

inline AutocorrPeak envelope_autocorr_peak(const std::vector<float>& x,
                                           int rate, double lo_s, double hi_s) {
  // Rectified moving-average envelope, 20 ms window.
  const int win = std::max(1, rate / 50);
  std::vector<double> env(x.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    acc += std::abs(x[i]);
    if (i >= static_cast<size_t>(win)) acc -= std::abs(x[i - win]);
    env[i] = acc / win;
  }
  double mean = 0.0;
  for (double v : env) mean += v;
  mean /= static_cast<double>(env.size());
  for (double& v : env) v -= mean;

  double r0 = 0.0;
  for (double v : env) r0 += v * v;
  AutocorrPeak peak;
  const int lo = static_cast<int>(lo_s * rate);
  const int hi = std::min(static_cast<int>(hi_s * rate),
                          static_cast<int>(env.size()) - 1);
  for (int lag = lo; lag <= hi; ++lag) {
    double r = 0.0;
    for (size_t i = 0; i + static_cast<size_t>(lag) < env.size(); ++i) {
      r += env[i] * env[i + static_cast<size_t>(lag)];
    }
    const double corr = r0 > 0.0 ? r / r0 : 0.0;
    if (corr > peak.correlation) {
      peak.correlation = corr;
      peak.lag_s = static_cast<double>(lag) / rate;
    }
  }
  return peak;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pcgnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracles

#endif  // PCGNET_TESTS_ORACLES_HPP
