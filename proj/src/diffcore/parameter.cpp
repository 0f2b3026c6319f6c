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

#include "apprentice/diffcore/parameter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace apprentice::diffcore {

void ParameterBlock::resize(std::size_t n) {
  value.resize(n, 0.0);
  gradient.resize(n, 0.0);
  velocity.resize(n, 0.0);
}

void ParameterBlock::zero_grad() {
  std::fill(gradient.begin(), gradient.end(), 0.0);
}

void ParameterBlock::reset_velocity() {
  std::fill(velocity.begin(), velocity.end(), 0.0);
}

void SgdConfig::validate() const {
  if (!(learning_rate_model > 0.0)) {
    throw std::invalid_argument("sgd: learning_rate_model must be > 0");
  }
  if (!(learning_rate_embedding > 0.0)) {
    throw std::invalid_argument("sgd: learning_rate_embedding must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("sgd: momentum must be in [0, 1)");
  }
  if (batch_size == 0) {
    throw std::invalid_argument("sgd: batch_size must be positive");
  }
  if (epochs == 0) {
    throw std::invalid_argument("sgd: epochs must be positive");
  }
}

Sgd::Sgd(SgdConfig config) : config_(config) { config_.validate(); }

double Sgd::learning_rate(ParameterGroup group) const {
  return group == ParameterGroup::kEmbedding ? config_.learning_rate_embedding
                                             : config_.learning_rate_model;
}

void Sgd::update_one(ParameterBlock& block, std::size_t i, double lr) {
  const double g = block.gradient[i];
  block.gradient[i] = 0.0;
  if (!std::isfinite(g)) {
    ++rejected_;
    return;
  }
  double& v = block.velocity[i];
  v = config_.momentum * v + g;
  block.value[i] -= lr * v;
}

void Sgd::step(ParameterBlock& block) {
  if (!block.trainable) {
    block.zero_grad();
    return;
  }
  const double lr = learning_rate(block.group);
  for (std::size_t i = 0; i < block.size(); ++i) update_one(block, i, lr);
}

void Sgd::step_rows(ParameterBlock& block, std::size_t row_width,
                    std::span<const std::size_t> rows) {
  if (!block.trainable) {
    block.zero_grad();
    return;
  }
  const double lr = learning_rate(block.group);
  for (std::size_t r : rows) {
    const std::size_t begin = r * row_width;
    if (begin + row_width > block.size()) {
      throw std::out_of_range("sgd: row index past end of block");
    }
    for (std::size_t i = begin; i < begin + row_width; ++i) {
      update_one(block, i, lr);
    }
  }
}

std::uint64_t checksum(std::span<const double> values, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace apprentice::diffcore
