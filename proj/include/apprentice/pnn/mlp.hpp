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

#include <cstdint>
#include <vector>

#include "apprentice/pnn/core.hpp"

namespace apprentice::pnn {

enum class Activation { kTanh, kRelu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network: hidden layers with a shared nonlinearity and a
/// linear output layer producing logits.
class Mlp final : public DifferentiableCore {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, Activation activation,
      std::uint64_t seed);

  std::string kind() const override { return "mlp"; }
  std::size_t input_width() const override { return sizes_.front(); }
  std::size_t output_width() const override { return sizes_.back(); }
  std::size_t workspace_size() const override { return workspace_size_; }

  void forward(std::span<const double> input, std::span<double> logits,
               std::span<double> workspace) const override;
  void backward(std::span<const double> input,
                std::span<const double> workspace,
                std::span<const double> dlogits,
                std::span<double> dinput) override;
  void input_gradient(std::span<const double> input,
                      std::span<const double> workspace,
                      std::span<const double> dlogits,
                      std::span<double> dinput) const override;

  std::vector<diffcore::ParameterBlock*> parameters() override {
    return {&params_};
  }
  std::vector<const diffcore::ParameterBlock*> parameters() const override {
    return {&params_};
  }
  std::unique_ptr<DifferentiableCore> clone() const override {
    return std::make_unique<Mlp>(*this);
  }
  nlohmann::json to_json() const override;
  static std::unique_ptr<Mlp> from_json(const nlohmann::json& j);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

 private:
  void propagate(std::span<const double> workspace,
                 std::span<const double> dlogits, std::span<double> dinput,
                 double* grad) const;

  std::vector<std::size_t> sizes_;
  Activation activation_;
  diffcore::ParameterBlock params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<std::size_t> act_offset_;
  std::size_t workspace_size_ = 0;
};

}  // namespace apprentice::pnn
