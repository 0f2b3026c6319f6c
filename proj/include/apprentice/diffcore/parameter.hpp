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

namespace apprentice::diffcore {

/// Which learning rate a parameter block receives.
enum class ParameterGroup : std::uint8_t { kModel, kEmbedding };

/// A contiguous block of scalar parameters with gradient and momentum state.
///
/// Element i is one Parameter (value, gradient, trainable flag). Gradients are
/// zero after construction and after every optimizer step.
struct ParameterBlock {
  ParameterBlock() = default;
  explicit ParameterBlock(std::size_t n,
                          ParameterGroup g = ParameterGroup::kModel)
      : value(n, 0.0), gradient(n, 0.0), velocity(n, 0.0), group(g) {}

  std::size_t size() const { return value.size(); }
  void resize(std::size_t n);
  void zero_grad();
  void reset_velocity();

  std::vector<double> value;
  std::vector<double> gradient;
  std::vector<double> velocity;
  ParameterGroup group = ParameterGroup::kModel;
  bool trainable = true;
};

struct SgdConfig {
  double learning_rate_model = 0.01;
  double learning_rate_embedding = 0.1;
  double momentum = 0.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Plain stochastic gradient descent with optional heavy-ball momentum:
/// v <- momentum * v + g; value <- value - lr * v.
class Sgd {
 public:
  explicit Sgd(SgdConfig config);

  /// Applies one update to every element of a trainable block and resets its
  /// gradients. Non-finite gradients are skipped and counted.
  void step(ParameterBlock& block);

  /// Row-sparse update: only rows listed in `rows` (each `row_width` wide)
  /// are stepped. Used for embedding tables so that demonstrators absent from
  /// a batch are left untouched.
  void step_rows(ParameterBlock& block, std::size_t row_width,
                 std::span<const std::size_t> rows);

  double learning_rate(ParameterGroup group) const;
  std::size_t rejected_updates() const { return rejected_; }
  const SgdConfig& config() const { return config_; }

 private:
  void update_one(ParameterBlock& block, std::size_t i, double lr);

  SgdConfig config_;
  std::size_t rejected_ = 0;
};

/// FNV-1a over the raw bytes of the values; used for frozen-parameter checks.
std::uint64_t checksum(std::span<const double> values,
                       std::uint64_t seed = 1469598103934665603ULL);

}  // namespace apprentice::diffcore
