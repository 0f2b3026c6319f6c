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
#include <span>
#include <string>
#include <vector>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/diffcore/parameter.hpp"
#include "apprentice/pnn/mlp.hpp"

namespace apprentice::actionrep {

struct TransitionConfig {
  std::size_t hidden = 64;
  std::size_t embedding_dim = 8;
  std::string activation = "tanh";
  double embedding_init_std = 0.1;
  diffcore::SgdConfig sgd;
};

struct TransitionReport {
  std::vector<double> epoch_loss;
  std::size_t transitions = 0;
  /// Schedules with fewer than two observations.
  std::size_t skipped_schedules = 0;
};

/// Predicts the next context from the current context and the embedding of
/// the action taken: s_{t+1} ~ f([omega_a | s_t]). When several actions are
/// taken at once their embeddings are averaged.
class TransitionModel {
 public:
  TransitionModel(std::size_t action_count, std::size_t context_dim,
                  const TransitionConfig& config, std::uint64_t seed);

  std::size_t action_count() const { return action_count_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t embedding_dim() const { return dim_; }

  /// Learned representation of action `a`. Throws std::out_of_range for an
  /// unknown id.
  std::vector<double> action_features(int a) const;
  std::vector<double> predict(std::span<const double> context,
                              std::span<const int> actions) const;

  /// Mean squared error per coordinate over every consecutive pair.
  double evaluate(const dataset::DemonstrationSet& data) const;

  /// Squared error of one transition; accumulates gradients into the
  /// network and the embedding table when `accumulate` is set.
  double transition_loss(std::span<const double> context,
                         std::span<const int> actions,
                         std::span<const double> next, double scale,
                         bool accumulate);

  pnn::Mlp& network() { return net_; }
  const pnn::Mlp& network() const { return net_; }
  diffcore::ParameterBlock& embeddings() { return table_; }
  const diffcore::ParameterBlock& embeddings() const { return table_; }

  nlohmann::json to_json() const;
  static TransitionModel from_json(const nlohmann::json& j);

 private:
  void fill_input(std::span<const double> context, std::span<const int> actions,
                  std::span<double> input) const;

  std::size_t action_count_;
  std::size_t context_dim_;
  std::size_t dim_;
  pnn::Mlp net_;
  diffcore::ParameterBlock table_;
};

/// Minibatch SGD on squared next-context error; the network and the action
/// embeddings are trained jointly.
TransitionModel train_transition(const dataset::DemonstrationSet& data,
                                 const TransitionConfig& config,
                                 TransitionReport* report = nullptr);

/// Copy of `data` whose per-action features are the learned embeddings.
dataset::DemonstrationSet with_learned_features(
    const dataset::DemonstrationSet& data, const TransitionModel& model);

}  // namespace apprentice::actionrep
