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

#ifndef PCGNET_FFT_HPP
#define PCGNET_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace pcgnet::fft {

// In-place iterative radix-2 FFT. a.size() must be a power of two.
void transform(std::vector<std::complex<double>>& a, bool inverse = false);

// Magnitude spectrum |X[k]| of a real frame for bins k = 0 .. n/2.
// n must be a power of two.
std::vector<double> real_magnitude(const float* x, size_t n);

}  // namespace pcgnet::fft

#endif  // PCGNET_FFT_HPP
