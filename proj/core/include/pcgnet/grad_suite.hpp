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

#ifndef PCGNET_GRAD_SUITE_HPP
#define PCGNET_GRAD_SUITE_HPP

#include <string>
#include <vector>

namespace pcgnet::nn {

enum class Precision { kFloat32, kFloat64 };

struct GradSuiteCheck {
  std::string name;
  double max_rel_error = 0.0;  // worst case over all seeds and varied tensors
  double tolerance = 0.0;
  int seeds_checked = 0;
  int seeds_skipped = 0;  // instances rejected by conditioning guards
  bool passed = false;
};

// Runs central-difference gradient checks for every differentiable op and a
// scaled-down end-to-end network, across `seeds` random instances each.
// Tolerance is 1e-3 in float32 mode, 1e-4 in float64 mode.
std::vector<GradSuiteCheck> run_gradient_suite(Precision precision,
                                               int seeds = 20);

bool all_passed(const std::vector<GradSuiteCheck>& checks);

}  // namespace pcgnet::nn

#endif  // PCGNET_GRAD_SUITE_HPP
