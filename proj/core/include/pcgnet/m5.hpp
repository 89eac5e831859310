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

#ifndef PCGNET_M5_HPP
#define PCGNET_M5_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pcgnet/tensor.hpp"

namespace pcgnet::m5 {

using nn::Mode;
using nn::Tensor;

// Architecture descriptor. The default is the raw-waveform network used for
// heart sounds: a long strided front-end convolution acting as a learned
// time-domain encoder, then three small-kernel blocks, each block ending in
// batch norm, ReLU and max pooling, then global average pooling and a linear
// classifier.
struct M5Config {
  std::array<int, 4> channels{32, 32, 64, 64};
  std::array<int, 4> kernels{80, 3, 3, 3};
  std::array<int, 4> strides{16, 1, 1, 1};
  std::array<int, 4> pools{4, 4, 4, 4};
  int num_classes = 5;
  int input_len = 8000;

  bool operator==(const M5Config&) const = default;
};

// Scaled-down configuration for end-to-end gradient verification. The
// full-size front end (kernel 80, stride 16, pool 4) drives a 400-sample
// input to zero length, so the tiny variant shrinks those too.
inline M5Config tiny_config() {
  M5Config c;
  c.channels = {2, 2, 4, 4};
  c.kernels = {8, 3, 3, 3};
  c.strides = {2, 1, 1, 1};
  c.pools = {2, 2, 2, 2};
  c.input_len = 400;
  return c;
}

// Sequence of time lengths after each conv and each pool:
// {conv1, pool1, conv2, pool2, conv3, pool3, conv4, pool4}.
// Throws if any stage collapses to length < 1.
inline std::vector<int> shape_trace(const M5Config& config) {
  std::vector<int> trace;
  int len = config.input_len;
  for (int b = 0; b < 4; ++b) {
    if (len < config.kernels[static_cast<size_t>(b)]) {
      throw std::invalid_argument(
          "m5: input length " + std::to_string(config.input_len) +
          " collapses at block " + std::to_string(b + 1) +
          " (length " + std::to_string(len) + " < kernel " +
          std::to_string(config.kernels[static_cast<size_t>(b)]) + ")");
    }
    len = (len - config.kernels[static_cast<size_t>(b)]) /
              config.strides[static_cast<size_t>(b)] +
          1;
    trace.push_back(len);
    len = len / config.pools[static_cast<size_t>(b)];
    if (len < 1) {
      throw std::invalid_argument(
          "m5: input length " + std::to_string(config.input_len) +
          " collapses at block " + std::to_string(b + 1) + " pooling");
    }
    trace.push_back(len);
  }
  return trace;
}

// Closed-form trainable parameter count:
// per block Cout*Cin*K + Cout (conv) + 2*C (batch norm), plus O*F + O for
// the classifier.
inline int64_t parameter_count(const M5Config& config) {
  int64_t total = 0;
  int cin = 1;
  for (int b = 0; b < 4; ++b) {
    const int64_t cout = config.channels[static_cast<size_t>(b)];
    total += cout * cin * config.kernels[static_cast<size_t>(b)] + cout;
    total += 2 * cout;  // gamma, beta
    cin = static_cast<int>(cout);
  }
  total += static_cast<int64_t>(config.num_classes) * cin + config.num_classes;
  return total;
}

// Extra forward-pass diagnostics, used by the gradient suite to reject
// instances that sit too close to a ReLU kink or a pooling tie for finite
// differences to be meaningful.
struct ForwardStats {
  double min_relu_margin = std::numeric_limits<double>::infinity();
  double min_pool_gap = std::numeric_limits<double>::infinity();
};

template <typename S>
struct M5Model {
  M5Config config;
  std::array<Tensor<S>, 4> conv_weight;
  std::array<Tensor<S>, 4> conv_bias;
  std::array<Tensor<S>, 4> bn_gamma;
  std::array<Tensor<S>, 4> bn_beta;
  std::array<nn::BatchNormState<S>, 4> bn_state;
  Tensor<S> fc_weight;
  Tensor<S> fc_bias;

  std::vector<Tensor<S>*> parameters() {
    std::vector<Tensor<S>*> out;
    for (int b = 0; b < 4; ++b) {
      out.push_back(&conv_weight[static_cast<size_t>(b)]);
      out.push_back(&conv_bias[static_cast<size_t>(b)]);
      out.push_back(&bn_gamma[static_cast<size_t>(b)]);
      out.push_back(&bn_beta[static_cast<size_t>(b)]);
    }
    out.push_back(&fc_weight);
    out.push_back(&fc_bias);
    return out;
  }

  std::vector<std::pair<std::string, Tensor<S>*>> named_parameters() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    for (int b = 0; b < 4; ++b) {
      const std::string prefix = "block" + std::to_string(b) + ".";
      out.emplace_back(prefix + "conv.weight",
                       &conv_weight[static_cast<size_t>(b)]);
      out.emplace_back(prefix + "conv.bias",
                       &conv_bias[static_cast<size_t>(b)]);
      out.emplace_back(prefix + "bn.gamma", &bn_gamma[static_cast<size_t>(b)]);
      out.emplace_back(prefix + "bn.beta", &bn_beta[static_cast<size_t>(b)]);
    }
    out.emplace_back("classifier.weight", &fc_weight);
    out.emplace_back("classifier.bias", &fc_bias);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }
};

// Builds a model with weights drawn uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// batch-norm gamma 1 / beta 0, and fresh running statistics. Deterministic
// for a fixed seed.
template <typename S>
M5Model<S> build_m5(const M5Config& config, uint64_t seed) {
  if (config.num_classes < 2) {
    throw std::invalid_argument("m5: need at least 2 classes");
  }
  shape_trace(config);  // validates the geometry up front

  Rng rng(mix_seed(seed, 0x5a5ull));
  M5Model<S> model;
  model.config = config;
  int cin = 1;
  for (int b = 0; b < 4; ++b) {
    const int cout = config.channels[static_cast<size_t>(b)];
    const int kernel = config.kernels[static_cast<size_t>(b)];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin) * kernel);
    model.conv_weight[static_cast<size_t>(b)] =
        Tensor<S>::uniform({cout, cin, kernel}, bound, rng, true);
    model.conv_bias[static_cast<size_t>(b)] =
        Tensor<S>::uniform({cout}, bound, rng, true);
    model.bn_gamma[static_cast<size_t>(b)] =
        Tensor<S>::filled({cout}, S(1), true);
    model.bn_beta[static_cast<size_t>(b)] =
        Tensor<S>::filled({cout}, S(0), true);
    model.bn_state[static_cast<size_t>(b)] = nn::BatchNormState<S>(cout);
    cin = cout;
  }
  const double fc_bound = 1.0 / std::sqrt(static_cast<double>(cin));
  model.fc_weight =
      Tensor<S>::uniform({config.num_classes, cin}, fc_bound, rng, true);
  model.fc_bias = Tensor<S>::uniform({config.num_classes}, fc_bound, rng, true);
  return model;
}

namespace detail {

template <typename S>
void update_stats(const Tensor<S>& pre_relu, const Tensor<S>& pre_pool,
                  int pool_window, ForwardStats* stats) {
  if (stats == nullptr) return;
  for (S v : pre_relu.data()) {
    stats->min_relu_margin =
        std::min(stats->min_relu_margin, std::abs(static_cast<double>(v)));
  }
  const auto& shape = pre_pool.shape();
  const int len = shape[2];
  const int lout = len / pool_window;
  const auto data = pre_pool.data();
  const int rows = shape[0] * shape[1];
  for (int r = 0; r < rows; ++r) {
    const S* src = data.data() + static_cast<size_t>(r) * len;
    for (int t = 0; t < lout; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      for (int k = 0; k < pool_window; ++k) {
        const double v = src[t * pool_window + k];
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      // A tie among ReLU zeros is harmless (both sides stay zero under a
      // small step); only gaps against an active runner-up matter.
      if (pool_window > 1 && second > 0.0) {
        stats->min_pool_gap = std::min(stats->min_pool_gap, best - second);
      }
    }
  }
}

}  // namespace detail

// Forward pass: conv -> batch norm -> ReLU -> max pool per block, then
// global average pooling over time and the linear classifier.
// Input must be [B, 1, config.input_len].
template <typename S>
Tensor<S> forward(M5Model<S>& model, const Tensor<S>& input, Mode mode,
                  ForwardStats* stats = nullptr) {
  const auto& config = model.config;
  if (input.shape().size() != 3 || input.dim(1) != 1 ||
      input.dim(2) != config.input_len) {
    std::string trace = "expected [B,1," + std::to_string(config.input_len) +
                        "], lengths ";
    for (int v : shape_trace(config)) trace += std::to_string(v) + " ";
    throw std::invalid_argument("m5 forward: bad input shape " +
                                nn::detail::shape_string(input.shape()) +
                                "; " + trace);
  }

  Tensor<S> x = input;
  for (int b = 0; b < 4; ++b) {
    x = nn::conv1d(x, model.conv_weight[static_cast<size_t>(b)],
                   model.conv_bias[static_cast<size_t>(b)],
                   config.strides[static_cast<size_t>(b)]);
    x = nn::batchnorm1d(x, model.bn_gamma[static_cast<size_t>(b)],
                        model.bn_beta[static_cast<size_t>(b)],
                        model.bn_state[static_cast<size_t>(b)], mode);
    const Tensor<S> pre_relu = x;
    x = nn::relu(x);
    detail::update_stats(pre_relu, x, config.pools[static_cast<size_t>(b)],
                         stats);
    x = nn::maxpool1d(x, config.pools[static_cast<size_t>(b)]);
  }
  x = nn::global_avg_pool(x);
  return nn::linear(x, model.fc_weight, model.fc_bias);
}

// Argmax class per row, eval mode; ties resolve to the lower class index.
template <typename S>
std::vector<int> predict(M5Model<S>& model, const Tensor<S>& input) {
  Tensor<S> logits = forward(model, input, Mode::kEval);
  const int batch = logits.dim(0), classes = logits.dim(1);
  const auto data = logits.data();
  std::vector<int> out(static_cast<size_t>(batch));
  for (int n = 0; n < batch; ++n) {
    const S* row = data.data() + static_cast<size_t>(n) * classes;
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[static_cast<size_t>(n)] = best;
  }
  return out;
}

}  // namespace pcgnet::m5

#endif  // PCGNET_M5_HPP
