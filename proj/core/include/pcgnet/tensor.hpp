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

#ifndef PCGNET_TENSOR_HPP
#define PCGNET_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcgnet/rng.hpp"

// Dense tensors with reverse-mode differentiation, covering exactly the
// operations the M5 network needs. The engine is templated on the scalar
// type: float is the training precision, double is the verification mode
// used by the gradient checks.

namespace pcgnet::nn {

enum class Mode { kTrain, kEval };

namespace detail {

template <typename S>
struct Node {
  std::vector<int> shape;
  std::vector<S> data;
  std::vector<S> grad;  // allocated lazily, same size as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;  // set on interior (op result) nodes

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  bool interior() const { return static_cast<bool>(backward_fn); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
};

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

}  // namespace detail

template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    return filled(std::move(shape), S(0), requires_grad);
  }

  static Tensor filled(std::vector<int> shape, S value,
                       bool requires_grad = false) {
    for (int d : shape) {
      if (d <= 0) {
        throw std::invalid_argument("tensor dimensions must be positive, got " +
                                    detail::shape_string(shape));
      }
    }
    auto node = std::make_shared<detail::Node<S>>();
    node->data.assign(static_cast<size_t>(detail::shape_numel(shape)), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from_data(std::vector<int> shape, std::vector<S> data,
                          bool requires_grad = false) {
    if (detail::shape_numel(shape) != static_cast<int64_t>(data.size())) {
      throw std::invalid_argument(
          "data length " + std::to_string(data.size()) +
          " does not match shape " + detail::shape_string(shape));
    }
    Tensor t = zeros(std::move(shape), requires_grad);
    t.node_->data = std::move(data);
    return t;
  }

  // Uniform(-bound, bound) fill from the given stream.
  static Tensor uniform(std::vector<int> shape, double bound, Rng& rng,
                        bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.node_->data) {
      v = static_cast<S>(rng.uniform(-bound, bound));
    }
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node().shape; }
  int dim(int i) const { return node().shape.at(static_cast<size_t>(i)); }
  int64_t numel() const { return node().numel(); }

  std::span<S> data() { return {node().data.data(), node().data.size()}; }
  std::span<const S> data() const {
    return {node().data.data(), node().data.size()};
  }

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool value) { node().requires_grad = value; }

  // True once a gradient buffer has been materialized.
  bool has_grad() const { return node().grad.size() == node().data.size(); }

  // Gradient buffer; allocated (zeroed) on first access.
  std::span<S> grad() {
    node().ensure_grad();
    return {node().grad.data(), node().grad.size()};
  }
  std::span<const S> grad() const {
    const_cast<detail::Node<S>&>(node()).ensure_grad();
    return {node().grad.data(), node().grad.size()};
  }

  void zero_grad() {
    node().ensure_grad();
    std::fill(node().grad.begin(), node().grad.end(), S(0));
  }

  S item() const {
    if (numel() != 1) {
      throw std::invalid_argument("item() requires a scalar, got shape " +
                                  detail::shape_string(shape()));
    }
    return node().data[0];
  }

  // Reverse-mode sweep from a scalar. Interior gradients are recomputed from
  // scratch each call; leaf gradients accumulate additively across calls.
  void backward() {
    if (numel() != 1) {
      throw std::invalid_argument("backward() requires a scalar loss, got " +
                                  detail::shape_string(shape()));
    }
    std::vector<detail::Node<S>*> order;
    topo_order(order);
    for (auto* n : order) {
      if (n->interior()) {
        n->ensure_grad();
        std::fill(n->grad.begin(), n->grad.end(), S(0));
      }
    }
    node().ensure_grad();
    node().grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->interior()) (*it)->backward_fn();
    }
  }

  std::shared_ptr<detail::Node<S>> node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node<S>> node)
      : node_(std::move(node)) {}

 private:
  detail::Node<S>& node() {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return *node_;
  }
  const detail::Node<S>& node() const {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return *node_;
  }

  void topo_order(std::vector<detail::Node<S>*>& order) const {
    std::unordered_set<detail::Node<S>*> visited;
    // Iterative post-order DFS; graphs can be deep for long loss chains.
    std::vector<std::pair<detail::Node<S>*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        detail::Node<S>* p = n->parents[next++].get();
        if (visited.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<detail::Node<S>> node_;
};

// Per-channel running statistics for batch normalization. These are training
// state, not graph nodes.
template <typename S>
struct BatchNormState {
  std::vector<S> running_mean;
  std::vector<S> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(int channels = 0)
      : running_mean(static_cast<size_t>(channels), S(0)),
        running_var(static_cast<size_t>(channels), S(1)) {}
};

namespace detail {

template <typename S>
std::shared_ptr<Node<S>> make_result(
    std::vector<int> shape, std::vector<std::shared_ptr<Node<S>>> parents) {
  auto node = std::make_shared<Node<S>>();
  node->data.assign(static_cast<size_t>(shape_numel(shape)), S(0));
  node->shape = std::move(shape);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    if (p->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  return node;
}

template <typename S>
void check_shape(const Tensor<S>& t, size_t rank, const char* op,
                 const char* role) {
  if (t.shape().size() != rank) {
    throw std::invalid_argument(std::string(op) + ": " + role +
                                " must have rank " + std::to_string(rank) +
                                ", got " + shape_string(t.shape()));
  }
}

}  // namespace detail

// Valid (no padding) 1-D convolution, computed as cross-correlation.
// input [B, Cin, L], weight [Cout, Cin, K], bias [Cout] -> [B, Cout, Lout]
// with Lout = floor((L - K) / stride) + 1.
template <typename S>
Tensor<S> conv1d(const Tensor<S>& input, const Tensor<S>& weight,
                 const Tensor<S>& bias, int stride) {
  detail::check_shape(input, 3, "conv1d", "input");
  detail::check_shape(weight, 3, "conv1d", "weight");
  detail::check_shape(bias, 1, "conv1d", "bias");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  const int batch = input.dim(0), cin = input.dim(1), len = input.dim(2);
  const int cout = weight.dim(0), kernel = weight.dim(2);
  if (weight.dim(1) != cin) {
    throw std::invalid_argument(
        "conv1d: input channels " + detail::shape_string(input.shape()) +
        " do not match weight " + detail::shape_string(weight.shape()));
  }
  if (bias.dim(0) != cout) {
    throw std::invalid_argument(
        "conv1d: bias " + detail::shape_string(bias.shape()) +
        " does not match weight " + detail::shape_string(weight.shape()));
  }
  if (len < kernel) {
    throw std::invalid_argument(
        "conv1d: input length " + std::to_string(len) +
        " shorter than kernel " + std::to_string(kernel));
  }
  const int lout = (len - kernel) / stride + 1;

  auto node = detail::make_result<S>({batch, cout, lout},
                                     {input.node_ptr(), weight.node_ptr(),
                                      bias.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* w = weight.node_ptr().get();
  auto* b = bias.node_ptr().get();
  auto* out = node.get();

  for (int n = 0; n < batch; ++n) {
    for (int co = 0; co < cout; ++co) {
      S* dst = out->data.data() +
               (static_cast<size_t>(n) * cout + co) * lout;
      const S bias_v = b->data[static_cast<size_t>(co)];
      for (int t = 0; t < lout; ++t) dst[t] = bias_v;
      for (int ci = 0; ci < cin; ++ci) {
        const S* src = in->data.data() +
                       (static_cast<size_t>(n) * cin + ci) * len;
        const S* ker = w->data.data() +
                       (static_cast<size_t>(co) * cin + ci) * kernel;
        if (stride == 1) {
          // Small-kernel path: accumulate one shifted axpy per tap, which
          // keeps the inner loop contiguous over t.
          for (int k = 0; k < kernel; ++k) {
            const S wk = ker[k];
            const S* __restrict xs = src + k;
            S* __restrict d = dst;
            for (int t = 0; t < lout; ++t) d[t] += wk * xs[t];
          }
        } else {
          for (int t = 0; t < lout; ++t) {
            const S* __restrict x = src + static_cast<size_t>(t) * stride;
            // Four accumulator chains; strict left-to-right summation would
            // keep this loop scalar.
            S a0 = S(0), a1 = S(0), a2 = S(0), a3 = S(0);
            int k = 0;
            for (; k + 4 <= kernel; k += 4) {
              a0 += x[k] * ker[k];
              a1 += x[k + 1] * ker[k + 1];
              a2 += x[k + 2] * ker[k + 2];
              a3 += x[k + 3] * ker[k + 3];
            }
            for (; k < kernel; ++k) a0 += x[k] * ker[k];
            dst[t] += (a0 + a1) + (a2 + a3);
          }
        }
      }
    }
  }

  out->backward_fn = [in, w, b, out, batch, cin, cout, len, kernel, lout,
                      stride]() {
    const bool need_in = in->requires_grad;
    const bool need_w = w->requires_grad;
    const bool need_b = b->requires_grad;
    if (need_in) in->ensure_grad();
    if (need_w) w->ensure_grad();
    if (need_b) b->ensure_grad();
    for (int n = 0; n < batch; ++n) {
      for (int co = 0; co < cout; ++co) {
        const S* go = out->grad.data() +
                      (static_cast<size_t>(n) * cout + co) * lout;
        if (need_b) {
          S acc = S(0);
          for (int t = 0; t < lout; ++t) acc += go[t];
          b->grad[static_cast<size_t>(co)] += acc;
        }
        for (int ci = 0; ci < cin; ++ci) {
          const size_t in_off = (static_cast<size_t>(n) * cin + ci) * len;
          const size_t w_off = (static_cast<size_t>(co) * cin + ci) * kernel;
          if (stride == 1) {
            for (int k = 0; k < kernel; ++k) {
              if (need_in) {
                const S wk = w->data[w_off + static_cast<size_t>(k)];
                S* __restrict gx = in->grad.data() + in_off + k;
                const S* __restrict g = go;
                for (int t = 0; t < lout; ++t) gx[t] += wk * g[t];
              }
              if (need_w) {
                const S* __restrict x =
                    in->data.data() + in_off + static_cast<size_t>(k);
                const S* __restrict g = go;
                S a0 = S(0), a1 = S(0), a2 = S(0), a3 = S(0);
                int t = 0;
                for (; t + 4 <= lout; t += 4) {
                  a0 += g[t] * x[t];
                  a1 += g[t + 1] * x[t + 1];
                  a2 += g[t + 2] * x[t + 2];
                  a3 += g[t + 3] * x[t + 3];
                }
                for (; t < lout; ++t) a0 += g[t] * x[t];
                w->grad[w_off + static_cast<size_t>(k)] +=
                    (a0 + a1) + (a2 + a3);
              }
            }
          } else {
            for (int t = 0; t < lout; ++t) {
              const S g = go[t];
              if (g == S(0)) continue;
              const size_t x_off = in_off + static_cast<size_t>(t) * stride;
              if (need_in) {
                const S* __restrict ker = w->data.data() + w_off;
                S* __restrict gx = in->grad.data() + x_off;
                for (int k = 0; k < kernel; ++k) gx[k] += g * ker[k];
              }
              if (need_w) {
                const S* __restrict x = in->data.data() + x_off;
                S* __restrict gw = w->grad.data() + w_off;
                for (int k = 0; k < kernel; ++k) gw[k] += g * x[k];
              }
            }
          }
        }
      }
    }
  };
  return Tensor<S>(std::move(node));
}

// Batch normalization over (batch, length) per channel.
// Train mode uses batch statistics and updates state's running estimates
// (momentum 0.1, unbiased variance); eval mode applies the running ones.
template <typename S>
Tensor<S> batchnorm1d(const Tensor<S>& input, const Tensor<S>& gamma,
                      const Tensor<S>& beta, BatchNormState<S>& state,
                      Mode mode) {
  detail::check_shape(input, 3, "batchnorm1d", "input");
  detail::check_shape(gamma, 1, "batchnorm1d", "gamma");
  detail::check_shape(beta, 1, "batchnorm1d", "beta");
  const int batch = input.dim(0), channels = input.dim(1), len = input.dim(2);
  if (gamma.dim(0) != channels || beta.dim(0) != channels ||
      static_cast<int>(state.running_mean.size()) != channels) {
    throw std::invalid_argument(
        "batchnorm1d: channel mismatch between input " +
        detail::shape_string(input.shape()) + " and parameters");
  }
  const int64_t count = static_cast<int64_t>(batch) * len;
  if (mode == Mode::kTrain && count < 2) {
    throw std::invalid_argument(
        "batchnorm1d: train mode needs at least 2 values per channel");
  }

  auto node = detail::make_result<S>(
      {batch, channels, len},
      {input.node_ptr(), gamma.node_ptr(), beta.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* g = gamma.node_ptr().get();
  auto* bt = beta.node_ptr().get();
  auto* out = node.get();

  // Per-channel statistics used by the forward pass (batch stats in train
  // mode, running stats in eval mode) and their inverse standard deviation.
  std::vector<S> mean(static_cast<size_t>(channels));
  std::vector<S> inv_std(static_cast<size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    double m, v;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int n = 0; n < batch; ++n) {
        const S* row = in->data.data() +
                       (static_cast<size_t>(n) * channels + c) * len;
        for (int t = 0; t < len; ++t) sum += row[t];
      }
      m = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < batch; ++n) {
        const S* row = in->data.data() +
                       (static_cast<size_t>(n) * channels + c) * len;
        for (int t = 0; t < len; ++t) {
          const double d = row[t] - m;
          sq += d * d;
        }
      }
      v = sq / static_cast<double>(count);  // biased, used for normalization
      const double unbiased =
          count > 1 ? sq / static_cast<double>(count - 1) : v;
      state.running_mean[static_cast<size_t>(c)] = static_cast<S>(
          (1.0 - state.momentum) * state.running_mean[static_cast<size_t>(c)] +
          state.momentum * m);
      state.running_var[static_cast<size_t>(c)] = static_cast<S>(
          (1.0 - state.momentum) * state.running_var[static_cast<size_t>(c)] +
          state.momentum * unbiased);
    } else {
      m = state.running_mean[static_cast<size_t>(c)];
      v = state.running_var[static_cast<size_t>(c)];
    }
    mean[static_cast<size_t>(c)] = static_cast<S>(m);
    inv_std[static_cast<size_t>(c)] =
        static_cast<S>(1.0 / std::sqrt(v + state.eps));
  }

  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const size_t off = (static_cast<size_t>(n) * channels + c) * len;
      const S* src = in->data.data() + off;
      S* dst = out->data.data() + off;
      const S mc = mean[static_cast<size_t>(c)];
      const S ic = inv_std[static_cast<size_t>(c)];
      const S gc = g->data[static_cast<size_t>(c)];
      const S bc = bt->data[static_cast<size_t>(c)];
      for (int t = 0; t < len; ++t) {
        dst[t] = gc * (src[t] - mc) * ic + bc;
      }
    }
  }

  const bool train = mode == Mode::kTrain;
  out->backward_fn = [in, g, bt, out, batch, channels, len, mean, inv_std,
                      train]() {
    const bool need_in = in->requires_grad;
    const bool need_g = g->requires_grad;
    const bool need_b = bt->requires_grad;
    if (need_in) in->ensure_grad();
    if (need_g) g->ensure_grad();
    if (need_b) bt->ensure_grad();
    const double count = static_cast<double>(batch) * len;
    for (int c = 0; c < channels; ++c) {
      const S mc = mean[static_cast<size_t>(c)];
      const S ic = inv_std[static_cast<size_t>(c)];
      const S gc = g->data[static_cast<size_t>(c)];
      double sum_go = 0.0, sum_go_xhat = 0.0;
      for (int n = 0; n < batch; ++n) {
        const size_t off = (static_cast<size_t>(n) * channels + c) * len;
        const S* go = out->grad.data() + off;
        const S* x = in->data.data() + off;
        for (int t = 0; t < len; ++t) {
          sum_go += go[t];
          sum_go_xhat += static_cast<double>(go[t]) * (x[t] - mc) * ic;
        }
      }
      if (need_g) {
        g->grad[static_cast<size_t>(c)] += static_cast<S>(sum_go_xhat);
      }
      if (need_b) {
        bt->grad[static_cast<size_t>(c)] += static_cast<S>(sum_go);
      }
      if (!need_in) continue;
      for (int n = 0; n < batch; ++n) {
        const size_t off = (static_cast<size_t>(n) * channels + c) * len;
        const S* go = out->grad.data() + off;
        const S* x = in->data.data() + off;
        S* gx = in->grad.data() + off;
        if (train) {
          // Full batch-statistics gradient.
          for (int t = 0; t < len; ++t) {
            const double xhat = (x[t] - mc) * ic;
            gx[t] += static_cast<S>(
                (gc * ic) *
                (go[t] - sum_go / count - xhat * sum_go_xhat / count));
          }
        } else {
          for (int t = 0; t < len; ++t) {
            gx[t] += static_cast<S>(go[t] * gc * ic);
          }
        }
      }
    }
  };
  return Tensor<S>(std::move(node));
}

template <typename S>
Tensor<S> relu(const Tensor<S>& input) {
  auto node = detail::make_result<S>(input.shape(), {input.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* out = node.get();
  for (size_t i = 0; i < in->data.size(); ++i) {
    out->data[i] = in->data[i] > S(0) ? in->data[i] : S(0);
  }
  out->backward_fn = [in, out]() {
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (size_t i = 0; i < in->data.size(); ++i) {
      if (in->data[i] > S(0)) in->grad[i] += out->grad[i];
    }
  };
  return Tensor<S>(std::move(node));
}

// Non-overlapping max pooling with stride equal to the window; a trailing
// remainder shorter than the window is dropped. Gradient flows to the first
// maximal element of each window.
template <typename S>
Tensor<S> maxpool1d(const Tensor<S>& input, int window) {
  detail::check_shape(input, 3, "maxpool1d", "input");
  if (window < 1) throw std::invalid_argument("maxpool1d: window must be >= 1");
  const int batch = input.dim(0), channels = input.dim(1), len = input.dim(2);
  if (len < window) {
    throw std::invalid_argument("maxpool1d: input length " +
                                std::to_string(len) + " shorter than window " +
                                std::to_string(window));
  }
  const int lout = len / window;

  auto node =
      detail::make_result<S>({batch, channels, lout}, {input.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* out = node.get();
  std::vector<int32_t> argmax(out->data.size());
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const S* src = in->data.data() +
                     (static_cast<size_t>(n) * channels + c) * len;
      const size_t out_off = (static_cast<size_t>(n) * channels + c) * lout;
      for (int t = 0; t < lout; ++t) {
        int best = t * window;
        for (int k = 1; k < window; ++k) {
          if (src[t * window + k] > src[best]) best = t * window + k;
        }
        out->data[out_off + t] = src[best];
        argmax[out_off + t] = best;
      }
    }
  }
  out->backward_fn = [in, out, batch, channels, len, lout,
                      argmax = std::move(argmax)]() {
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const size_t in_off = (static_cast<size_t>(n) * channels + c) * len;
        const size_t out_off = (static_cast<size_t>(n) * channels + c) * lout;
        for (int t = 0; t < lout; ++t) {
          in->grad[in_off + static_cast<size_t>(argmax[out_off + t])] +=
              out->grad[out_off + t];
        }
      }
    }
  };
  return Tensor<S>(std::move(node));
}

// Mean over the time axis: [B, C, L] -> [B, C].
template <typename S>
Tensor<S> global_avg_pool(const Tensor<S>& input) {
  detail::check_shape(input, 3, "global_avg_pool", "input");
  const int batch = input.dim(0), channels = input.dim(1), len = input.dim(2);
  auto node = detail::make_result<S>({batch, channels}, {input.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* out = node.get();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const S* src = in->data.data() +
                     (static_cast<size_t>(n) * channels + c) * len;
      double acc = 0.0;
      for (int t = 0; t < len; ++t) acc += src[t];
      out->data[static_cast<size_t>(n) * channels + c] =
          static_cast<S>(acc / len);
    }
  }
  out->backward_fn = [in, out, batch, channels, len]() {
    if (!in->requires_grad) return;
    in->ensure_grad();
    const S scale = S(1) / static_cast<S>(len);
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < channels; ++c) {
        const S g = out->grad[static_cast<size_t>(n) * channels + c] * scale;
        S* gx = in->grad.data() +
                (static_cast<size_t>(n) * channels + c) * len;
        for (int t = 0; t < len; ++t) gx[t] += g;
      }
    }
  };
  return Tensor<S>(std::move(node));
}

// Fully connected layer: input [B, F], weight [O, F], bias [O] -> [B, O].
template <typename S>
Tensor<S> linear(const Tensor<S>& input, const Tensor<S>& weight,
                 const Tensor<S>& bias) {
  detail::check_shape(input, 2, "linear", "input");
  detail::check_shape(weight, 2, "linear", "weight");
  detail::check_shape(bias, 1, "linear", "bias");
  const int batch = input.dim(0), features = input.dim(1);
  const int out_dim = weight.dim(0);
  if (weight.dim(1) != features || bias.dim(0) != out_dim) {
    throw std::invalid_argument(
        "linear: shape mismatch, input " + detail::shape_string(input.shape()) +
        " weight " + detail::shape_string(weight.shape()) + " bias " +
        detail::shape_string(bias.shape()));
  }
  auto node = detail::make_result<S>(
      {batch, out_dim},
      {input.node_ptr(), weight.node_ptr(), bias.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* w = weight.node_ptr().get();
  auto* b = bias.node_ptr().get();
  auto* out = node.get();
  for (int n = 0; n < batch; ++n) {
    const S* x = in->data.data() + static_cast<size_t>(n) * features;
    S* dst = out->data.data() + static_cast<size_t>(n) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      const S* row = w->data.data() + static_cast<size_t>(o) * features;
      S acc = b->data[static_cast<size_t>(o)];
      for (int f = 0; f < features; ++f) acc += x[f] * row[f];
      dst[o] = acc;
    }
  }
  out->backward_fn = [in, w, b, out, batch, features, out_dim]() {
    const bool need_in = in->requires_grad;
    const bool need_w = w->requires_grad;
    const bool need_b = b->requires_grad;
    if (need_in) in->ensure_grad();
    if (need_w) w->ensure_grad();
    if (need_b) b->ensure_grad();
    for (int n = 0; n < batch; ++n) {
      const S* go = out->grad.data() + static_cast<size_t>(n) * out_dim;
      const S* x = in->data.data() + static_cast<size_t>(n) * features;
      S* gx = need_in ? in->grad.data() + static_cast<size_t>(n) * features
                      : nullptr;
      for (int o = 0; o < out_dim; ++o) {
        const S g = go[o];
        if (g == S(0)) continue;
        if (need_b) b->grad[static_cast<size_t>(o)] += g;
        const S* row = w->data.data() + static_cast<size_t>(o) * features;
        if (need_in) {
          for (int f = 0; f < features; ++f) gx[f] += g * row[f];
        }
        if (need_w) {
          S* gw = w->grad.data() + static_cast<size_t>(o) * features;
          for (int f = 0; f < features; ++f) gw[f] += g * x[f];
        }
      }
    }
  };
  return Tensor<S>(std::move(node));
}

// Mean softmax cross-entropy over the batch, computed with the
// max-subtracted log-sum-exp. Gradient is (softmax - one_hot) / B.
template <typename S>
Tensor<S> softmax_cross_entropy(const Tensor<S>& logits,
                                const std::vector<int>& labels) {
  detail::check_shape(logits, 2, "softmax_cross_entropy", "logits");
  const int batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int>(labels.size()) != batch) {
    throw std::invalid_argument(
        "softmax_cross_entropy: got " + std::to_string(labels.size()) +
        " labels for batch " + std::to_string(batch));
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw std::invalid_argument("softmax_cross_entropy: label " +
                                  std::to_string(label) +
                                  " out of range [0, " +
                                  std::to_string(classes) + ")");
    }
  }

  auto node = detail::make_result<S>({1}, {logits.node_ptr()});
  auto* in = logits.node_ptr().get();
  auto* out = node.get();
  std::vector<S> softmax(in->data.size());
  double loss = 0.0;
  for (int n = 0; n < batch; ++n) {
    const S* z = in->data.data() + static_cast<size_t>(n) * classes;
    S zmax = z[0];
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, z[c]);
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) {
      denom += std::exp(static_cast<double>(z[c] - zmax));
    }
    const double log_denom = std::log(denom);
    for (int c = 0; c < classes; ++c) {
      softmax[static_cast<size_t>(n) * classes + c] = static_cast<S>(
          std::exp(static_cast<double>(z[c] - zmax)) / denom);
    }
    loss += log_denom - static_cast<double>(
                            z[labels[static_cast<size_t>(n)]] - zmax);
  }
  out->data[0] = static_cast<S>(loss / batch);

  out->backward_fn = [in, out, batch, classes, labels,
                      softmax = std::move(softmax)]() {
    if (!in->requires_grad) return;
    in->ensure_grad();
    const S g = out->grad[0] / static_cast<S>(batch);
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < classes; ++c) {
        const size_t i = static_cast<size_t>(n) * classes + c;
        const S one_hot = c == labels[static_cast<size_t>(n)] ? S(1) : S(0);
        in->grad[i] += g * (softmax[i] - one_hot);
      }
    }
  };
  return Tensor<S>(std::move(node));
}

// Reduction to a scalar.
template <typename S>
Tensor<S> sum(const Tensor<S>& input) {
  auto node = detail::make_result<S>({1}, {input.node_ptr()});
  auto* in = input.node_ptr().get();
  auto* out = node.get();
  double acc = 0.0;
  for (S v : in->data) acc += v;
  out->data[0] = static_cast<S>(acc);
  out->backward_fn = [in, out]() {
    if (!in->requires_grad) return;
    in->ensure_grad();
    const S g = out->grad[0];
    for (auto& v : in->grad) v += g;
  };
  return Tensor<S>(std::move(node));
}

// Elementwise sum of two same-shape tensors.
template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch " +
                                detail::shape_string(a.shape()) + " vs " +
                                detail::shape_string(b.shape()));
  }
  auto node =
      detail::make_result<S>(a.shape(), {a.node_ptr(), b.node_ptr()});
  auto* na = a.node_ptr().get();
  auto* nb = b.node_ptr().get();
  auto* out = node.get();
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = na->data[i] + nb->data[i];
  }
  out->backward_fn = [na, nb, out]() {
    if (na->requires_grad) {
      na->ensure_grad();
      for (size_t i = 0; i < out->grad.size(); ++i) na->grad[i] += out->grad[i];
    }
    if (nb->requires_grad) {
      nb->ensure_grad();
      for (size_t i = 0; i < out->grad.size(); ++i) nb->grad[i] += out->grad[i];
    }
  };
  return Tensor<S>(std::move(node));
}

// Elementwise (Hadamard) product of two same-shape tensors.
template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul: shape mismatch " +
                                detail::shape_string(a.shape()) + " vs " +
                                detail::shape_string(b.shape()));
  }
  auto node =
      detail::make_result<S>(a.shape(), {a.node_ptr(), b.node_ptr()});
  auto* na = a.node_ptr().get();
  auto* nb = b.node_ptr().get();
  auto* out = node.get();
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = na->data[i] * nb->data[i];
  }
  out->backward_fn = [na, nb, out]() {
    if (na->requires_grad) {
      na->ensure_grad();
      for (size_t i = 0; i < out->grad.size(); ++i) {
        na->grad[i] += out->grad[i] * nb->data[i];
      }
    }
    if (nb->requires_grad) {
      nb->ensure_grad();
      for (size_t i = 0; i < out->grad.size(); ++i) {
        nb->grad[i] += out->grad[i] * na->data[i];
      }
    }
  };
  return Tensor<S>(std::move(node));
}

}  // namespace pcgnet::nn

#endif  // PCGNET_TENSOR_HPP
