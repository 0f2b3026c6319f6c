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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apprentice/diffcore/parameter.hpp"
#include "json.hpp"

namespace apprentice::pnn {

/// Per-column affine standardization applied to inputs before a core sees
/// them: x' = (x - offset) / scale.
struct InputScaler {
  std::vector<double> offset;
  std::vector<double> scale;

  bool empty() const { return offset.empty(); }
  void apply(std::span<const double> in, std::span<double> out) const;
  nlohmann::json to_json() const;
  static InputScaler from_json(const nlohmann::json& j);
};

/// A differentiable map from an input row to a vector of logits, with
/// hand-derived reverse-mode gradients.
///
/// Workspaces are caller-owned scratch buffers of workspace_size() doubles;
/// forward() fills one and backward() reads it back.
class DifferentiableCore {
 public:
  virtual ~DifferentiableCore() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t output_width() const = 0;
  virtual std::size_t workspace_size() const = 0;

  virtual void forward(std::span<const double> input, std::span<double> logits,
                       std::span<double> workspace) const = 0;

  /// Accumulates dL/dtheta into the parameter blocks and, if `dinput` is
  /// non-empty, writes dL/dinput.
  virtual void backward(std::span<const double> input,
                        std::span<const double> workspace,
                        std::span<const double> dlogits,
                        std::span<double> dinput) = 0;

  /// dL/dinput only; parameters are untouched.
  virtual void input_gradient(std::span<const double> input,
                              std::span<const double> workspace,
                              std::span<const double> dlogits,
                              std::span<double> dinput) const = 0;

  virtual std::vector<diffcore::ParameterBlock*> parameters() = 0;
  virtual std::vector<const diffcore::ParameterBlock*> parameters() const = 0;

  virtual std::unique_ptr<DifferentiableCore> clone() const = 0;
  virtual nlohmann::json to_json() const = 0;

  const InputScaler& scaler() const { return scaler_; }
  void set_scaler(InputScaler scaler);

  void zero_grad();
  std::size_t parameter_count() const;

 protected:
  InputScaler scaler_;
};

}  // namespace apprentice::pnn
