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

#include "apprentice/envs/lowdim.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "apprentice/diffcore/rng.hpp"

namespace apprentice::envs {

void LowDimConfig::validate() const {
  if (schedule_count == 0) {
    throw std::invalid_argument("lowdim: schedule_count must be positive");
  }
  if (observations_per_schedule != 20) {
    throw std::invalid_argument(
        "lowdim: observations_per_schedule is fixed at 20");
  }
  if (!(lambda_distribution >= 0.0 && lambda_distribution <= 1.0)) {
    throw std::invalid_argument("lowdim: lambda_distribution outside [0, 1]");
  }
  if (!(x_one_probability >= 0.0 && x_one_probability <= 1.0)) {
    throw std::invalid_argument("lowdim: x_one_probability outside [0, 1]");
  }
}

int lowdim_label(int x, double z, int lambda) {
  const bool fires = (z >= 0.0 && lambda == 1) || (z < 0.0 && lambda == 2);
  return fires ? x : 0;
}

LowDimData generate_lowdim_with_modes(const LowDimConfig& config) {
  config.validate();
  LowDimData data;
  auto& set = data.set;
  set.domain = dataset::DomainTag::kLowDim;
  set.action_count = 2;
  set.context_dim = 2;
  set.action_dim = 2;
  set.context_names = {"x", "z"};
  set.action_names = {"is_action_0", "is_action_1"};

  for (std::size_t s = 0; s < config.schedule_count; ++s) {
    Rng rng(derive_seed(config.seed, s));
    std::bernoulli_distribution mode(config.lambda_distribution);
    std::bernoulli_distribution coin(config.x_one_probability);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int lambda = mode(rng) ? 1 : 2;
    data.lambdas.push_back(lambda);

    dataset::Schedule schedule;
    schedule.schedule_id = s;
    schedule.demonstrator_id = "lowdim-" + std::to_string(s);
    for (std::size_t t = 0; t < config.observations_per_schedule; ++t) {
      const int x = coin(rng) ? 1 : 0;
      const double z = gauss(rng);
      dataset::Observation obs;
      obs.timestep = t;
      obs.context = {static_cast<double>(x), z};
      obs.action_features = {{1.0, 0.0}, {0.0, 1.0}};
      obs.taken_actions = {lowdim_label(x, z, lambda)};
      schedule.observations.push_back(std::move(obs));
    }
    set.schedules.push_back(std::move(schedule));
  }
  return data;
}

dataset::DemonstrationSet generate_lowdim(const LowDimConfig& config) {
  return generate_lowdim_with_modes(config).set;
}

}  // namespace apprentice::envs
