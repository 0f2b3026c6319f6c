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

#include "apprentice/pnn/core.hpp"

#include <stdexcept>

namespace apprentice::pnn {

void InputScaler::apply(std::span<const double> in,
                        std::span<double> out) const {
  if (offset.empty()) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = (in[i] - offset[i]) / scale[i];
  }
}

nlohmann::json InputScaler::to_json() const {
  return {{"offset", offset}, {"scale", scale}};
}

InputScaler InputScaler::from_json(const nlohmann::json& j) {
  InputScaler s;
  s.offset = j.at("offset").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.offset.size() != s.scale.size()) {
    throw std::invalid_argument("scaler: offset/scale length mismatch");
  }
  return s;
}

void DifferentiableCore::set_scaler(InputScaler scaler) {
  if (!scaler.empty() && (scaler.offset.size() != input_width() ||
                          scaler.scale.size() != input_width())) {
    throw std::invalid_argument("scaler width does not match core input");
  }
  for (double s : scaler.scale) {
    if (!(s > 0.0)) throw std::invalid_argument("scaler: scale must be > 0");
  }
  scaler_ = std::move(scaler);
}

void DifferentiableCore::zero_grad() {
  for (auto* b : parameters()) b->zero_grad();
}

std::size_t DifferentiableCore::parameter_count() const {
  std::size_t n = 0;
  for (const auto* b : parameters()) n += b->size();
  return n;
}

}  // namespace apprentice::pnn
