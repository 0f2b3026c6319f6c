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
#include <vector>

#include "apprentice/dataset/dataset.hpp"

namespace apprentice::envs {

/// Two-mode synthetic environment. Each schedule belongs to one hidden mode
/// lambda in {1, 2}; observations are (x, z) with x binary and z ~ N(0, 1).
struct LowDimConfig {
  std::size_t schedule_count = 50;
  std::size_t observations_per_schedule = 20;
  /// Probability that a demonstrator has lambda = 1.
  double lambda_distribution = 0.5;
  /// Probability that x = 1. Values near 1 keep the two labels balanced.
  double x_one_probability = 0.95;
  std::uint64_t seed = 1;

  void validate() const;
};

/// y = x * 1[(z >= 0 and lambda = 1) or (z < 0 and lambda = 2)].
int lowdim_label(int x, double z, int lambda);

struct LowDimData {
  dataset::DemonstrationSet set;
  /// Hidden mode per schedule, aligned with set.schedules.
  std::vector<int> lambdas;
};

LowDimData generate_lowdim_with_modes(const LowDimConfig& config);
dataset::DemonstrationSet generate_lowdim(const LowDimConfig& config);

}  // namespace apprentice::envs
