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

#include "pcgnet/grad_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pcgnet/grad_check.hpp"
#include "pcgnet/m5.hpp"
#include "pcgnet/rng.hpp"
#include "pcgnet/tensor.hpp"

namespace pcgnet::nn {

namespace {

constexpr uint64_t kSuiteSeed = 0x9d7f3a1cull;

template <typename S>
Tensor<S> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  Tensor<S> t = Tensor<S>::zeros(std::move(shape));
  for (auto& v : t.data()) v = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

// The finite-difference step per check. Multilinear ops admit a large step
// (central differences are exact for them up to round-off, and a larger step
// suppresses the float32 evaluation noise); smooth nonlinear ops balance
// truncation against noise; float64 uses small steps throughout.
double step_for(bool multilinear, bool is32) {
  if (is32) return multilinear ? 0.05 : 3e-3;
  return multilinear ? 1e-5 : kGradCheckStep64;
}

template <typename S>
struct SuiteRunner {
  bool is32;
  double tolerance;
  int seeds;
  std::vector<GradSuiteCheck> results;

  // Runs `vary` (which must call grad_check and return its result) for every
  // seed and records the worst error.
  void run(const std::string& name,
           const std::function<double(Rng&)>& one_seed) {
    GradSuiteCheck check;
    check.name = name;
    check.tolerance = tolerance;
    for (int i = 0; i < seeds; ++i) {
      Rng rng(mix_seed(kSuiteSeed, static_cast<uint64_t>(i) * 977 +
                                       results.size() * 131071));
      check.max_rel_error = std::max(check.max_rel_error, one_seed(rng));
      ++check.seeds_checked;
    }
    check.passed = check.max_rel_error <= check.tolerance;
    results.push_back(std::move(check));
  }

  void conv1d_check() {
    run("conv1d", [this](Rng& rng) {
      const int batch = 2, cin = 3, cout = 4, len = 20, kernel = 5, stride = 2;
      Tensor<S> x = random_tensor<S>({batch, cin, len}, rng);
      Tensor<S> w = random_tensor<S>({cout, cin, kernel}, rng);
      Tensor<S> b = random_tensor<S>({cout}, rng);
      const double h = step_for(true, is32);
      double worst = 0.0;
      auto vary = [&](Tensor<S>& target) {
        std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>&) {
          return sum(conv1d(x, w, b, stride));
        };
        worst = std::max(worst, grad_check<S>(f, target, h));
      };
      vary(x);
      vary(w);
      vary(b);
      return worst;
    });
  }

  void linear_check() {
    run("linear", [this](Rng& rng) {
      Tensor<S> x = random_tensor<S>({3, 8}, rng);
      Tensor<S> w = random_tensor<S>({5, 8}, rng);
      Tensor<S> b = random_tensor<S>({5}, rng);
      const double h = step_for(true, is32);
      double worst = 0.0;
      auto vary = [&](Tensor<S>& target) {
        std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>&) {
          return sum(linear(x, w, b));
        };
        worst = std::max(worst, grad_check<S>(f, target, h));
      };
      vary(x);
      vary(w);
      vary(b);
      return worst;
    });
  }

  void relu_check() {
    run("relu", [this](Rng& rng) {
      const double h = step_for(true, is32);
      // Keep every input at least 10h away from the kink.
      Tensor<S> x = Tensor<S>::zeros({4, 6});
      for (auto& v : x.data()) {
        const double magnitude = rng.uniform(10.0 * h + 0.05, 1.5);
        v = static_cast<S>(rng.uniform() < 0.5 ? -magnitude : magnitude);
      }
      Tensor<S> r = random_tensor<S>({4, 6}, rng, 0.5, 1.5);
      std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>& in) {
        return sum(mul(relu(in), r));
      };
      return grad_check<S>(f, x, h);
    });
  }

  void maxpool_check() {
    run("maxpool1d", [this](Rng& rng) {
      const double h = step_for(true, is32);
      const int window = 4;
      Tensor<S> x = random_tensor<S>({2, 3, 21}, rng);
      // Enforce a clear winner per window so the step cannot flip the argmax.
      auto data = x.data();
      const int rows = 2 * 3;
      for (int r = 0; r < rows; ++r) {
        S* row = data.data() + static_cast<size_t>(r) * 21;
        for (int t = 0; t + window <= 21; t += window) {
          int best = t;
          for (int k = 1; k < window; ++k) {
            if (row[t + k] > row[best]) best = t + k;
          }
          row[best] = static_cast<S>(row[best] + 0.5);
        }
      }
      std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>& in) {
        return sum(maxpool1d(in, window));
      };
      return grad_check<S>(f, x, h);
    });
  }

  void global_avg_pool_check() {
    run("global_avg_pool", [this](Rng& rng) {
      Tensor<S> x = random_tensor<S>({3, 4, 9}, rng);
      std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>& in) {
        return sum(global_avg_pool(in));
      };
      return grad_check<S>(f, x, step_for(true, is32));
    });
  }

  void batchnorm_train_check() {
    run("batchnorm1d_train", [this](Rng& rng) {
      const int channels = 3;
      Tensor<S> x = random_tensor<S>({2, channels, 7}, rng);
      Tensor<S> gamma = random_tensor<S>({channels}, rng, 0.5, 1.5);
      Tensor<S> beta = random_tensor<S>({channels}, rng, -0.5, 0.5);
      // Weighted reduction: a plain sum has structurally zero input gradient.
      Tensor<S> r = Tensor<S>::zeros({2, channels, 7});
      for (auto& v : r.data()) {
        const double magnitude = rng.uniform(0.5, 1.5);
        v = static_cast<S>(rng.uniform() < 0.5 ? -magnitude : magnitude);
      }
      const double h = step_for(false, is32);
      double worst = 0.0;
      auto vary = [&](Tensor<S>& target) {
        std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>&) {
          BatchNormState<S> state(channels);
          return sum(mul(batchnorm1d(x, gamma, beta, state, Mode::kTrain), r));
        };
        worst = std::max(worst, grad_check<S>(f, target, h));
      };
      vary(x);
      vary(gamma);
      vary(beta);
      return worst;
    });
  }

  void batchnorm_eval_check() {
    run("batchnorm1d_eval", [this](Rng& rng) {
      const int channels = 3;
      Tensor<S> x = random_tensor<S>({2, channels, 7}, rng);
      Tensor<S> gamma = random_tensor<S>({channels}, rng, 0.5, 1.5);
      Tensor<S> beta = random_tensor<S>({channels}, rng, -0.5, 0.5);
      BatchNormState<S> state(channels);
      for (auto& v : state.running_mean) {
        v = static_cast<S>(rng.uniform(-0.5, 0.5));
      }
      for (auto& v : state.running_var) {
        v = static_cast<S>(rng.uniform(0.5, 2.0));
      }
      Tensor<S> r = random_tensor<S>({2, channels, 7}, rng, 0.5, 1.5);
      const double h = step_for(true, is32);  // eval mode is affine in x
      double worst = 0.0;
      auto vary = [&](Tensor<S>& target) {
        std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>&) {
          return sum(mul(batchnorm1d(x, gamma, beta, state, Mode::kEval), r));
        };
        worst = std::max(worst, grad_check<S>(f, target, h));
      };
      vary(x);
      vary(gamma);
      vary(beta);
      return worst;
    });
  }

  void softmax_ce_check() {
    run("softmax_cross_entropy", [this](Rng& rng) {
      const int batch = 4, classes = 5;
      Tensor<S> logits = random_tensor<S>({batch, classes}, rng);
      std::vector<int> labels(batch);
      for (auto& l : labels) l = static_cast<int>(rng.below(classes));
      std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>& in) {
        return softmax_cross_entropy(in, labels);
      };
      return grad_check<S>(f, logits, step_for(false, is32));
    });
  }

  void sum_check() {
    run("sum", [this](Rng& rng) {
      Tensor<S> x = random_tensor<S>({3, 7}, rng);
      std::function<Tensor<S>(Tensor<S>&)> f = [](Tensor<S>& in) {
        return sum(in);
      };
      return grad_check<S>(f, x, step_for(true, is32));
    });
  }

  void add_check() {
    run("add", [this](Rng& rng) {
      Tensor<S> x = random_tensor<S>({4, 5}, rng);
      Tensor<S> y = random_tensor<S>({4, 5}, rng);
      std::function<Tensor<S>(Tensor<S>&)> f = [&](Tensor<S>& in) {
        return sum(add(in, y));
      };
      return grad_check<S>(f, x, step_for(true, is32));
    });
  }

  void mul_check() {
    run("mul", [this](Rng& rng) {
      Tensor<S> x = random_tensor<S>({4, 5}, rng);
      // x appears on both sides, covering repeated-parent accumulation
      // (d/dx sum(x*x) = 2x).
      std::function<Tensor<S>(Tensor<S>&)> f = [](Tensor<S>& in) {
        return sum(mul(in, in));
      };
      // Quadratic, not multilinear in the varied coordinate, but the second
      // derivative is constant so central differences stay exact.
      return grad_check<S>(f, x, step_for(true, is32));
    });
  }

  void m5_end_to_end_check(Mode mode) {
    GradSuiteCheck check;
    check.name = mode == Mode::kTrain ? "m5_tiny_end_to_end"
                                      : "m5_tiny_end_to_end_eval";
    check.tolerance = tolerance;
    const double h = is32 ? 1e-2 : kGradCheckStep64;
    const int batch = 2;
    const m5::M5Config config = m5::tiny_config();

    int attempts = 0;
    const int max_attempts = seeds * 20;
    while (check.seeds_checked < seeds && attempts < max_attempts) {
      const uint64_t instance_seed =
          mix_seed(kSuiteSeed, 0xe2eull + static_cast<uint64_t>(attempts));
      ++attempts;
      Rng rng(instance_seed);
      m5::M5Model<S> model = m5::build_m5<S>(config, rng.next());
      Tensor<S> input =
          random_tensor<S>({batch, 1, config.input_len}, rng, -1.0, 1.0);
      std::vector<int> labels(batch);
      for (auto& l : labels) {
        l = static_cast<int>(rng.below(config.num_classes));
      }
      if (mode == Mode::kEval) {
        // Populate running statistics so eval mode sees realistic ones.
        Tensor<S> warm = random_tensor<S>({batch, 1, config.input_len}, rng);
        (void)m5::forward(model, warm, Mode::kTrain);
        (void)m5::forward(model, input, Mode::kTrain);
      }

      std::function<Tensor<S>(Tensor<S>&)> f = [&, mode](Tensor<S>&) {
        return softmax_cross_entropy(m5::forward(model, input, mode), labels);
      };

      double worst = 0.0;
      if (is32) {
        // In float32, restrict the variation to the classifier: a parameter
        // step there cannot move any ReLU or pooling input, so the measured
        // path is smooth. The convolutional and batch-norm backward passes
        // get their float32 coverage from the per-op checks above.
        worst = std::max(worst, grad_check<S>(f, model.fc_weight, h));
        worst = std::max(worst, grad_check<S>(f, model.fc_bias, h));
      } else {
        // Reject instances that sit close to a ReLU kink or a pooling tie;
        // finite differences would measure the wrong one-sided slope there.
        m5::ForwardStats stats;
        (void)m5::forward(model, input, mode, &stats);
        const double margin = 50.0 * kGradCheckStep64;
        if (stats.min_relu_margin < margin || stats.min_pool_gap < margin) {
          ++check.seeds_skipped;
          continue;
        }
        for (auto& [name, param] : model.named_parameters()) {
          // In train mode a conv bias shifts every channel value equally and
          // the batch-mean subtraction cancels it exactly: its true gradient
          // is identically zero and central differences only measure
          // round-off against the 1e-8 floor. The eval-mode pass covers the
          // bias path (running stats do not track the perturbation).
          if (mode == Mode::kTrain &&
              name.find("conv.bias") != std::string::npos) {
            continue;
          }
          worst = std::max(worst, grad_check<S>(f, *param, h));
        }
        worst = std::max(worst, grad_check<S>(f, input, h));
      }
      check.max_rel_error = std::max(check.max_rel_error, worst);
      ++check.seeds_checked;
    }
    check.passed =
        check.seeds_checked == seeds && check.max_rel_error <= check.tolerance;
    results.push_back(std::move(check));
  }
};

template <typename S>
std::vector<GradSuiteCheck> run_suite_impl(bool is32, int seeds) {
  SuiteRunner<S> runner;
  runner.is32 = is32;
  runner.tolerance = is32 ? 1e-3 : 1e-4;
  runner.seeds = seeds;
  runner.conv1d_check();
  runner.linear_check();
  runner.relu_check();
  runner.maxpool_check();
  runner.global_avg_pool_check();
  runner.batchnorm_train_check();
  runner.batchnorm_eval_check();
  runner.softmax_ce_check();
  runner.sum_check();
  runner.add_check();
  runner.mul_check();
  runner.m5_end_to_end_check(Mode::kTrain);
  runner.m5_end_to_end_check(Mode::kEval);
  return std::move(runner.results);
}

}  // namespace

std::vector<GradSuiteCheck> run_gradient_suite(Precision precision,
                                               int seeds) {
  if (precision == Precision::kFloat32) {
    return run_suite_impl<float>(true, seeds);
  }
  return run_suite_impl<double>(false, seeds);
}

bool all_passed(const std::vector<GradSuiteCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const GradSuiteCheck& c) { return c.passed; });
}

}  // namespace pcgnet::nn
