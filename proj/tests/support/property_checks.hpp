// Copyright 2026 The Apprentice Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace apprentice::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// |a - b| / max(|a|, |b|, kGradientFloor). The floor keeps near-zero
/// gradients from turning round-off into large relative errors.
inline constexpr double kGradientFloor = 1e-4;
inline constexpr double kGradientTolerance = 1e-4;
inline constexpr double kFiniteStep = 1e-5;

double relative_error(double analytic, double numeric);

CheckResult check_random_tapes(std::size_t count, std::uint64_t seed);
CheckResult check_pnn_gradients(bool multi_label);
/// Depth-2 model with the importance scores frozen to their one-hot.
CheckResult check_pddt_gradients(bool multi_label);
CheckResult check_transition_gradients();
CheckResult check_marginal_normalization(bool multi_label);
CheckResult check_pairwise_construction(bool multi_label);
CheckResult check_path_probabilities();
CheckResult check_crisp_agreement(std::size_t inputs);
CheckResult check_expert_oracle(std::size_t rollouts);
CheckResult check_frozen_adaptation(bool multi_label);
CheckResult check_dataset_roundtrip(bool multi_label);

/// Every check on single-label data.
std::vector<CheckResult> core_suite();
/// The checks that involve labels, run on multi-label scheduling data.
std::vector<CheckResult> multi_label_suite();

}  // namespace apprentice::checks
