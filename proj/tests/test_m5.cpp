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
#include <fstream>

#include <doctest.h>

#include "oracles.hpp"
#include "pcgnet/checkpoint.hpp"
#include "pcgnet/grad_check.hpp"
#include "pcgnet/m5.hpp"
#include "pcgnet/optim.hpp"
#include "pcgnet/rng.hpp"

using namespace pcgnet::m5;
using pcgnet::Rng;
using pcgnet::nn::Tensor;

namespace {

Tensor<float> random_input(int batch, int len, uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t = Tensor<float>::zeros({batch, 1, len});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-0.9, 0.9));
  return t;
}

}  // namespace

TEST_SUITE("m5") {

TEST_CASE("parameter count matches the per-layer formula") {
  const M5Config config;
  // conv blocks: Cout*Cin*K + Cout
  CHECK(32 * 1 * 80 + 32 == 2592);
  CHECK(32 * 32 * 3 + 32 == 3104);
  CHECK(64 * 32 * 3 + 64 == 6208);
  CHECK(64 * 64 * 3 + 64 == 12352);
  // batch norm: 2 per channel; classifier: 5*64 + 5.
  const int bn_total = 2 * 32 + 2 * 32 + 2 * 64 + 2 * 64;
  CHECK(bn_total == 384);
  CHECK(parameter_count(config) == 2592 + 3104 + 6208 + 12352 + 384 + 325);
  CHECK(parameter_count(config) == 24965);
}

TEST_CASE("parameter count matches enumeration over the built model") {
  auto model = build_m5<float>(M5Config{}, 3);
  int64_t total = 0;
  for (auto* p : model.parameters()) total += p->numel();
  CHECK(total == 24965);
  CHECK(model.parameters().size() == 18);
}

TEST_CASE("shape trace for the 8000-sample input") {
  const auto trace = shape_trace(M5Config{});
  CHECK(trace == std::vector<int>{496, 124, 122, 30, 28, 7, 5, 1});
}

TEST_CASE("forward maps [5,1,8000] to [5,5]") {
  auto model = build_m5<float>(M5Config{}, 1);
  const auto input = random_input(5, 8000, 2);
  auto logits = forward(model, input, Mode::kTrain);
  CHECK(logits.shape() == std::vector<int>{5, 5});
}

TEST_CASE("forward rejects wrong input lengths with the shape trace") {
  auto model = build_m5<float>(M5Config{}, 1);
  const auto input = random_input(2, 4000, 3);
  CHECK_THROWS_WITH_AS(forward(model, input, Mode::kEval),
                       doctest::Contains("[B,1,8000]"), std::invalid_argument);
}

TEST_CASE("two-class variant shapes the classifier accordingly") {
  M5Config config;
  config.num_classes = 2;
  auto model = build_m5<float>(config, 5);
  CHECK(model.fc_weight.shape() == std::vector<int>{2, 64});
  CHECK(model.fc_bias.shape() == std::vector<int>{2});
  CHECK_THROWS_AS(([&] {
                    M5Config bad;
                    bad.num_classes = 1;
                    return build_m5<float>(bad, 0);
                  }()),
                  std::invalid_argument);
}

TEST_CASE("build is deterministic per seed") {
  auto a = build_m5<float>(M5Config{}, 11);
  auto b = build_m5<float>(M5Config{}, 11);
  auto c = build_m5<float>(M5Config{}, 12);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  bool all_equal = true, any_different = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    const auto da = pa[i]->data();
    const auto db = pb[i]->data();
    const auto dc = pc[i]->data();
    for (size_t j = 0; j < da.size(); ++j) {
      if (da[j] != db[j]) all_equal = false;
      if (da[j] != dc[j]) any_different = true;
    }
  }
  CHECK(all_equal);
  CHECK(any_different);
}

TEST_CASE("all-zero input produces identical logit rows") {
  auto model = build_m5<float>(M5Config{}, 9);
  Tensor<float> zeros = Tensor<float>::zeros({4, 1, 8000});
  auto logits = forward(model, zeros, Mode::kEval);
  for (int n = 1; n < 4; ++n) {
    for (int c = 0; c < 5; ++c) {
      CHECK(logits.data()[static_cast<size_t>(n * 5 + c)] ==
            logits.data()[static_cast<size_t>(c)]);
    }
  }
}

TEST_CASE("eval-mode forward is bit-reproducible") {
  auto model = build_m5<float>(M5Config{}, 4);
  const auto input = random_input(3, 8000, 10);
  auto a = forward(model, input, Mode::kEval);
  auto b = forward(model, input, Mode::kEval);
  for (size_t i = 0; i < a.data().size(); ++i) {
    CHECK(a.data()[i] == b.data()[i]);
  }
}

TEST_CASE("predict takes the argmax with ties toward lower classes") {
  // Drive the classifier directly: zero weights leave only the bias, so the
  // logits equal fc_bias for every row.
  M5Config config;
  auto model = build_m5<float>(config, 6);
  for (auto& v : model.fc_weight.data()) v = 0.0f;
  auto& bias = model.fc_bias;

  std::fill(bias.data().begin(), bias.data().end(), 0.0f);
  bias.data()[4] = 1.0f;
  const auto input = random_input(2, 8000, 11);
  CHECK(predict(model, input) == std::vector<int>{4, 4});

  std::fill(bias.data().begin(), bias.data().end(), 0.7f);
  CHECK(predict(model, input) == std::vector<int>{0, 0});
}

TEST_CASE("predict is invariant to a constant logit shift") {
  auto model = build_m5<float>(M5Config{}, 13);
  const auto input = random_input(5, 8000, 12);
  const auto before = predict(model, input);
  for (auto& v : model.fc_bias.data()) v += 0.37f;
  const auto after = predict(model, input);
  CHECK(before == after);
}

TEST_CASE("tiny config keeps every stage positive at input 400") {
  const auto trace = shape_trace(tiny_config());
  REQUIRE(trace.size() == 8);
  for (int len : trace) CHECK(len >= 1);
  CHECK(trace.back() >= 1);

  // The full-size front end cannot digest a 400-sample input.
  M5Config full;
  full.input_len = 400;
  CHECK_THROWS_AS(shape_trace(full), std::invalid_argument);
}

TEST_CASE("end-to-end gradient of the tiny model passes at 1e-4 (64-bit)") {
  Rng rng(77);
  const auto config = tiny_config();
  auto model = build_m5<double>(config, 21);
  Tensor<double> input = Tensor<double>::zeros({2, 1, config.input_len});
  for (auto& v : input.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels{1, 3};

  std::function<Tensor<double>(Tensor<double>&)> f = [&](Tensor<double>&) {
    return pcgnet::nn::softmax_cross_entropy(
        forward(model, input, Mode::kTrain), labels);
  };
  CHECK(pcgnet::nn::grad_check<double>(f, input, 1e-6) <= 1e-4);
  CHECK(pcgnet::nn::grad_check<double>(f, model.fc_weight, 1e-6) <= 1e-4);
  CHECK(pcgnet::nn::grad_check<double>(f, model.conv_weight[0], 1e-6) <= 1e-4);
}

TEST_CASE("checkpoint round trip restores parameters, stats and adam state") {
  oracles::TempDir dir("ckpt");
  auto model = build_m5<float>(M5Config{}, 31);
  auto params = model.parameters();
  pcgnet::nn::AdamState<float> adam;
  adam.init(params);

  // One step so running stats and moments are non-trivial.
  const auto input = random_input(4, 8000, 13);
  model.zero_grad();
  auto loss = pcgnet::nn::softmax_cross_entropy(
      forward(model, input, Mode::kTrain), {0, 1, 2, 3});
  loss.backward();
  pcgnet::nn::adam_step(params, adam);

  const auto path = dir.path() / "model.ckpt";
  save_checkpoint(model, &adam, path);
  auto loaded = load_checkpoint(path);

  REQUIRE(loaded.model.config == model.config);
  const auto loaded_params = loaded.model.parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    const auto a = params[i]->data();
    const auto b = loaded_params[i]->data();
    REQUIRE(a.size() == b.size());
    for (size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
  }
  for (int b = 0; b < 4; ++b) {
    CHECK(loaded.model.bn_state[b].running_mean == model.bn_state[b].running_mean);
    CHECK(loaded.model.bn_state[b].running_var == model.bn_state[b].running_var);
  }
  REQUIRE(loaded.adam.has_value());
  CHECK(loaded.adam->step == 1);
  CHECK(loaded.adam->m == adam.m);
  CHECK(loaded.adam->v == adam.v);

  // Same logits after reload, bit for bit.
  auto before = forward(model, input, Mode::kEval);
  auto after = forward(loaded.model, input, Mode::kEval);
  for (size_t i = 0; i < before.data().size(); ++i) {
    CHECK(before.data()[i] == after.data()[i]);
  }
}

TEST_CASE("checkpoint loading rejects unknown content") {
  oracles::TempDir dir("ckpt");
  const auto path = dir.path() / "bad.ckpt";
  std::ofstream(path) << "{\"format\":\"something-else\",\"version\":9}\n";
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
}

}  // TEST_SUITE
