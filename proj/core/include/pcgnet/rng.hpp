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

#ifndef PCGNET_RNG_HPP
#define PCGNET_RNG_HPP

#include <cstdint>
#include <utility>
#include <vector>

namespace pcgnet {

// SplitMix64 generator. The <random> distributions are not bit-stable across
// standard library implementations, so everything seedable goes through this.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  uint64_t below(uint64_t n) { return n <= 1 ? 0 : next() % n; }

  // Fisher-Yates, used instead of std::shuffle for cross-platform stability.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<size_t>(below(i))]);
    }
  }

 private:
  uint64_t state_;
};

// Derives an independent stream seed for a subsystem (fold, init, shuffle...).
inline uint64_t mix_seed(uint64_t base, uint64_t salt) {
  Rng r(base ^ (0x517cc1b727220a95ull * (salt + 0x2545f4914f6cdd1dull)));
  r.next();
  return r.next();
}

}  // namespace pcgnet

#endif  // PCGNET_RNG_HPP
