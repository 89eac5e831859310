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

#ifndef PCGNET_GRAD_CHECK_HPP
#define PCGNET_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pcgnet/tensor.hpp"

namespace pcgnet::nn {

// Default central-difference steps per precision.
inline constexpr double kGradCheckStep32 = 1e-3;
inline constexpr double kGradCheckStep64 = 1e-6;

// Compares the reverse-mode gradient of a pure scalar function against
// central differences (f(x+h) - f(x-h)) / 2h taken per coordinate of
// `input`. Returns the largest coordinate discrepancy relative to the
// gradient scale: max_i |fd_i - ad_i| / max(||fd||_inf, ||ad||_inf, 1e-8).
// Scale-relative normalization keeps coordinates whose true derivative
// happens to cross zero from dominating the metric with rounding noise.
template <typename S>
double grad_check(const std::function<Tensor<S>(Tensor<S>&)>& f,
                  Tensor<S>& input, double h) {
  input.set_requires_grad(true);
  input.zero_grad();
  Tensor<S> loss = f(input);
  loss.backward();

  const auto grad = input.grad();
  std::vector<double> analytic(grad.begin(), grad.end());

  auto data = input.data();
  std::vector<double> numeric(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    const S saved = data[i];
    data[i] = static_cast<S>(static_cast<double>(saved) + h);
    const double f_plus = static_cast<double>(f(input).item());
    data[i] = static_cast<S>(static_cast<double>(saved) - h);
    const double f_minus = static_cast<double>(f(input).item());
    data[i] = saved;
    numeric[i] = (f_plus - f_minus) / (2.0 * h);
  }

  double scale = 1e-8;
  for (size_t i = 0; i < numeric.size(); ++i) {
    scale = std::max({scale, std::abs(numeric[i]), std::abs(analytic[i])});
  }
  double max_rel = 0.0;
  for (size_t i = 0; i < numeric.size(); ++i) {
    max_rel = std::max(max_rel, std::abs(numeric[i] - analytic[i]) / scale);
  }
  return max_rel;
}

}  // namespace pcgnet::nn

#endif  // PCGNET_GRAD_CHECK_HPP
