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

#ifndef PCGNET_OPTIM_HPP
#define PCGNET_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcgnet/tensor.hpp"

namespace pcgnet::nn {

// Adam with classic L2 weight decay (decay added to the gradient, not
// decoupled) and bias-corrected moments.
template <typename S>
struct AdamState {
  int64_t step = 0;
  double lr = 0.0005;
  double weight_decay = 0.0001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<S>> m;  // first moments, one buffer per parameter
  std::vector<std::vector<S>> v;  // second moments

  void init(const std::vector<Tensor<S>*>& params) {
    m.clear();
    v.clear();
    step = 0;
    for (const auto* p : params) {
      m.emplace_back(static_cast<size_t>(p->numel()), S(0));
      v.emplace_back(static_cast<size_t>(p->numel()), S(0));
    }
  }
};

template <typename S>
void adam_step(const std::vector<Tensor<S>*>& params, AdamState<S>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument(
        "adam_step: state not initialized for this parameter list");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<S>& p = *params[i];
    if (!p.has_grad()) {
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) +
                                  " has no gradient");
    }
    auto data = p.data();
    auto grad = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != data.size()) {
      throw std::invalid_argument("adam_step: moment shape mismatch at " +
                                  std::to_string(i));
    }
    for (size_t j = 0; j < data.size(); ++j) {
      const double g = static_cast<double>(grad[j]) +
                       state.weight_decay * static_cast<double>(data[j]);
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      m[j] = static_cast<S>(mj);
      v[j] = static_cast<S>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      data[j] = static_cast<S>(data[j] -
                               state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

}  // namespace pcgnet::nn

#endif  // PCGNET_OPTIM_HPP
