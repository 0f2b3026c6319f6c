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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace apprentice::diffcore {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Counts numerical interventions during loss evaluation. A healthy run
/// should finish with clamp_events == 0.
struct LossStats {
  std::size_t clamp_events = 0;
  std::size_t evaluations = 0;
};

/// Renyi divergence D_alpha(target || predicted).
///
/// alpha == 1 uses the KL limit, sum t_i ln(t_i / p_i). `target` must be a
/// distribution (normalize multi-hot vectors before calling, or use
/// binary_heads_renyi_loss). Where t_i > 0 and p_i < 1e-7 the probability is
/// clamped to 1e-7 and a clamp event recorded. If `grad` is non-empty it
/// receives dD/dp.
double renyi_loss(std::span<const double> predicted,
                  std::span<const double> target, double alpha,
                  LossStats* stats = nullptr, std::span<double> grad = {});

/// Sum over heads of the two-class Renyi divergence between (y, 1-y) and
/// (p, 1-p). `grad` receives dL/dp per head.
double binary_heads_renyi_loss(std::span<const double> predicted,
                               std::span<const double> target, double alpha,
                               LossStats* stats = nullptr,
                               std::span<double> grad = {});

/// Softmax restricted to entries where mask != 0 (all entries if mask is
/// empty). Masked entries get probability exactly 0.
void softmax(std::span<const double> logits, std::span<double> out,
             std::span<const unsigned char> mask = {});

/// Chain rule through a (masked) softmax: dL/dz from dL/dp and p.
void softmax_backward(std::span<const double> probs,
                      std::span<const double> dprobs, std::span<double> dlogits,
                      std::span<const unsigned char> mask = {});

inline double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace apprentice::diffcore
