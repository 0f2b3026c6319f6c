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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "apprentice/dataset/dataset.hpp"

namespace apprentice::pairwise {

/// How an observation is turned into supervised examples.
enum class Framing {
  kPairwise,   ///< counterfactual (taken, not-taken) comparisons
  kPointwise,  ///< one binary example per action
  kStandard,   ///< one multi-class example per observation
};

const char* to_string(Framing framing);
Framing framing_from_string(const std::string& name);

/// Whether an observation may carry several taken actions.
enum class LabelMode { kSingle, kMulti };

struct PairwiseExample {
  struct Meta {
    std::string demonstrator;
    std::uint64_t timestep = 0;
    int first = 0;   ///< action a
    int second = 0;  ///< action a'
  };
  /// [embedding | context | x_a - x_a']
  std::vector<double> features;
  int label = 0;
  Meta meta;
};

/// Counterfactual comparisons for one observation: for every taken action a
/// and every available non-taken action a', emits ([w, ctx, x_a - x_a'], 1)
/// followed by ([w, ctx, x_a' - x_a], 0). A single-label observation with n
/// available actions yields 2(n - 1) examples.
///
/// Throws std::invalid_argument if the observation has fewer than two
/// available actions, or several taken actions in LabelMode::kSingle.
std::vector<PairwiseExample> build_pairwise(const dataset::Observation& obs,
                                            std::span<const double> embedding,
                                            const std::string& demonstrator = {},
                                            LabelMode mode = LabelMode::kSingle);

/// Writes [embedding | context | x_a - x_b] into `out`.
void pairwise_features(const dataset::Observation& obs,
                       std::span<const double> embedding, int a, int b,
                       std::span<double> out);

struct PointwiseExample {
  std::vector<double> features;  ///< [embedding | context | x_a]
  int label = 0;
  int action = 0;
};

/// One example per available action, labeled 1 iff it was taken.
std::vector<PointwiseExample> build_pointwise(const dataset::Observation& obs,
                                              std::span<const double> embedding);

struct StandardExample {
  std::vector<double> features;  ///< [embedding | context | x_0 | ... | x_{A-1}]
  std::vector<double> target;    ///< normalized (multi-)hot over actions
  std::vector<unsigned char> mask;
};

StandardExample build_standard(const dataset::Observation& obs,
                               std::span<const double> embedding);

struct MarginalOptions {
  /// Keep the a'' == a' (self-comparison) terms of the marginalization.
  bool include_self_terms = false;
};

struct ActionDistribution {
  std::vector<double> probabilities;  ///< over all actions; 0 if unavailable
  int action = -1;                    ///< argmax, ties to the lowest id
  bool degenerate = false;            ///< every score was zero; uniform used
};

/// Marginalizes pairwise preferences into a distribution over the available
/// actions: P(a) = sum_{a'} f(a, a') / sum_{a'} sum_{a''} f(a', a'').
/// `score(a, b)` must lie in [0, 1].
ActionDistribution marginalize(const dataset::Observation& obs,
                               const std::function<double(int, int)>& score,
                               MarginalOptions options = {});

/// Convenience: builds pairwise features for every ordered pair and feeds
/// them to `scorer` before marginalizing.
ActionDistribution predict_action(
    const std::function<double(std::span<const double>)>& scorer,
    const dataset::Observation& obs, std::span<const double> embedding,
    MarginalOptions options = {});

/// Argmax with ties to the lowest index.
int argmax(std::span<const double> values);

}  // namespace apprentice::pairwise
