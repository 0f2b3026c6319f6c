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

#include "apprentice/pnn/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "apprentice/diffcore/rng.hpp"

namespace apprentice::pnn {

const char* to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation activation,
         std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) {
    throw std::invalid_argument("mlp: need input and output layer sizes");
  }
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("mlp: zero-width layer");
  }
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_offset_.push_back(n);
    n += sizes_[l] * sizes_[l + 1];
    bias_offset_.push_back(n);
    n += sizes_[l + 1];
  }
  params_ = diffcore::ParameterBlock(n);
  std::size_t w = 0;
  for (std::size_t s : sizes_) {
    act_offset_.push_back(w);
    w += s;
  }
  workspace_size_ = w;

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double fan_in = static_cast<double>(sizes_[l]);
    const double fan_out = static_cast<double>(sizes_[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) {
      params_.value[weight_offset_[l] + i] = u(rng);
    }
  }
}

void Mlp::forward(std::span<const double> input, std::span<double> logits,
                  std::span<double> ws) const {
  if (input.size() != input_width()) {
    throw std::invalid_argument("mlp: input width " +
                                std::to_string(input.size()) + ", expected " +
                                std::to_string(input_width()));
  }
  scaler_.apply(input, ws.subspan(0, sizes_[0]));
  const double* p = params_.value.data();
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* a = ws.data() + act_offset_[l];
    double* z = ws.data() + act_offset_[l + 1];
    const double* W = p + weight_offset_[l];
    const double* b = p + bias_offset_[l];
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < n_out; ++o) {
      double s = b[o];
      const double* row = W + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) s += row[i] * a[i];
      if (hidden) {
        s = activation_ == Activation::kTanh ? std::tanh(s) : (s > 0 ? s : 0);
      }
      z[o] = s;
    }
  }
  const double* out = ws.data() + act_offset_.back();
  std::copy(out, out + output_width(), logits.begin());
}

void Mlp::propagate(std::span<const double> ws, std::span<const double> dlogits,
                    std::span<double> dinput, double* grad) const {
  thread_local std::vector<double> delta;
  thread_local std::vector<double> prev;
  delta.assign(dlogits.begin(), dlogits.end());
  const double* p = params_.value.data();
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* a = ws.data() + act_offset_[l];
    const double* W = p + weight_offset_[l];
    if (grad) {
      double* gW = grad + weight_offset_[l];
      double* gb = grad + bias_offset_[l];
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        if (d == 0.0) continue;
        double* row = gW + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) row[i] += d * a[i];
      }
    }
    if (l == 0 && dinput.empty()) break;
    prev.assign(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = W + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) prev[i] += d * row[i];
    }
    if (l > 0) {
      for (std::size_t i = 0; i < n_in; ++i) {
        if (activation_ == Activation::kTanh) {
          prev[i] *= 1.0 - a[i] * a[i];
        } else if (a[i] <= 0.0) {
          prev[i] = 0.0;
        }
      }
    }
    delta.swap(prev);
  }
  if (!dinput.empty()) {
    for (std::size_t i = 0; i < sizes_[0]; ++i) {
      dinput[i] = scaler_.empty() ? delta[i] : delta[i] / scaler_.scale[i];
    }
  }
}

void Mlp::backward(std::span<const double> /*input*/,
                   std::span<const double> ws, std::span<const double> dlogits,
                   std::span<double> dinput) {
  propagate(ws, dlogits, dinput, params_.gradient.data());
}

void Mlp::input_gradient(std::span<const double> /*input*/,
                         std::span<const double> ws,
                         std::span<const double> dlogits,
                         std::span<double> dinput) const {
  propagate(ws, dlogits, dinput, nullptr);
}

nlohmann::json Mlp::to_json() const {
  return {{"kind", kind()},
          {"layer_sizes", sizes_},
          {"activation", to_string(activation_)},
          {"parameters", params_.value},
          {"scaler", scaler_.to_json()}};
}

std::unique_ptr<Mlp> Mlp::from_json(const nlohmann::json& j) {
  auto mlp = std::make_unique<Mlp>(
      j.at("layer_sizes").get<std::vector<std::size_t>>(),
      activation_from_string(j.at("activation").get<std::string>()), 0);
  auto values = j.at("parameters").get<std::vector<double>>();
  if (values.size() != mlp->params_.size()) {
    throw std::invalid_argument("mlp checkpoint: parameter count mismatch");
  }
  mlp->params_.value = std::move(values);
  mlp->set_scaler(InputScaler::from_json(j.at("scaler")));
  return mlp;
}

}  // namespace apprentice::pnn
