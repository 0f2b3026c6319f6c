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

#include "apprentice/diffcore/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace apprentice::diffcore {

namespace {

void check_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "renyi_loss: " << what << " has invalid entry " << v;
      throw std::invalid_argument(os.str());
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "renyi_loss: " << what << " sums to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double renyi_loss(std::span<const double> predicted,
                  std::span<const double> target, double alpha,
                  LossStats* stats, std::span<double> grad) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("renyi_loss: size mismatch");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("renyi_loss: alpha must be > 0");
  }
  if (!grad.empty() && grad.size() != predicted.size()) {
    throw std::invalid_argument("renyi_loss: gradient size mismatch");
  }
  check_distribution(predicted, "predicted");
  check_distribution(target, "target");
  if (stats) ++stats->evaluations;
  std::fill(grad.begin(), grad.end(), 0.0);

  auto clamped = [&](double p) {
    if (p < kProbabilityEpsilon) {
      if (stats) ++stats->clamp_events;
      return kProbabilityEpsilon;
    }
    return p;
  };

  double loss = 0.0;
  if (alpha == 1.0) {
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double t = target[i];
      if (t <= 0.0) continue;
      const double p = clamped(predicted[i]);
      loss += t * (std::log(t) - std::log(p));
      if (!grad.empty()) grad[i] = -t / p;
    }
  } else {
    std::vector<double> terms(predicted.size(), 0.0);
    std::vector<double> ps(predicted.size(), 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double t = target[i];
      if (t <= 0.0) continue;
      ps[i] = clamped(predicted[i]);
      terms[i] = std::pow(t, alpha) * std::pow(ps[i], 1.0 - alpha);
      s += terms[i];
    }
    loss = std::log(s) / (alpha - 1.0);
    if (!grad.empty()) {
      for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (target[i] <= 0.0) continue;
        grad[i] = -(terms[i] / ps[i]) / s;
      }
    }
  }
  return std::max(0.0, loss);
}

double binary_heads_renyi_loss(std::span<const double> predicted,
                               std::span<const double> target, double alpha,
                               LossStats* stats, std::span<double> grad) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("binary_heads_renyi_loss: size mismatch");
  }
  double total = 0.0;
  for (std::size_t h = 0; h < predicted.size(); ++h) {
    const double p[2] = {predicted[h], 1.0 - predicted[h]};
    const double t[2] = {target[h], 1.0 - target[h]};
    double g[2] = {0.0, 0.0};
    total += renyi_loss(p, t, alpha, stats,
                        grad.empty() ? std::span<double>{} : std::span<double>(g));
    if (!grad.empty()) grad[h] = g[0] - g[1];
  }
  return total;
}

void softmax(std::span<const double> logits, std::span<double> out,
             std::span<const unsigned char> mask) {
  const bool masked = !mask.empty();
  double m = -INFINITY;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (masked && !mask[i]) continue;
    m = std::max(m, logits[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (masked && !mask[i]) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::exp(logits[i] - m);
    total += out[i];
  }
  if (total <= 0.0) {
    throw std::invalid_argument("softmax: every entry is masked");
  }
  for (double& v : out) v /= total;
}

void softmax_backward(std::span<const double> probs,
                      std::span<const double> dprobs, std::span<double> dlogits,
                      std::span<const unsigned char> mask) {
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dprobs[i];
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      dlogits[i] = 0.0;
      continue;
    }
    dlogits[i] = probs[i] * (dprobs[i] - dot);
  }
}

}  // namespace apprentice::diffcore
