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

#include "apprentice/pairwise/pairwise.hpp"

#include <algorithm>
#include <stdexcept>

namespace apprentice::pairwise {

const char* to_string(Framing framing) {
  switch (framing) {
    case Framing::kPairwise: return "pairwise";
    case Framing::kPointwise: return "pointwise";
    case Framing::kStandard: return "standard";
  }
  return "?";
}

Framing framing_from_string(const std::string& name) {
  if (name == "pairwise") return Framing::kPairwise;
  if (name == "pointwise") return Framing::kPointwise;
  if (name == "standard") return Framing::kStandard;
  throw std::invalid_argument("unknown framing '" + name + "'");
}

int argmax(std::span<const double> values) {
  int best = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

void pairwise_features(const dataset::Observation& obs,
                       std::span<const double> embedding, int a, int b,
                       std::span<double> out) {
  const auto& xa = obs.action_features.at(static_cast<std::size_t>(a));
  const auto& xb = obs.action_features.at(static_cast<std::size_t>(b));
  const std::size_t need = embedding.size() + obs.context.size() + xa.size();
  if (out.size() != need) {
    throw std::invalid_argument("pairwise_features: output width mismatch");
  }
  auto it = std::copy(embedding.begin(), embedding.end(), out.begin());
  it = std::copy(obs.context.begin(), obs.context.end(), it);
  for (std::size_t k = 0; k < xa.size(); ++k) *it++ = xa[k] - xb[k];
}

std::vector<PairwiseExample> build_pairwise(const dataset::Observation& obs,
                                            std::span<const double> embedding,
                                            const std::string& demonstrator,
                                            LabelMode mode) {
  const std::vector<int> avail = obs.available_actions();
  if (avail.size() < 2) {
    throw std::invalid_argument(
        "build_pairwise: need at least two available actions");
  }
  if (mode == LabelMode::kSingle && obs.taken_actions.size() != 1) {
    throw std::invalid_argument(
        "build_pairwise: multi-label observation in single-label mode");
  }
  auto taken = [&](int a) {
    return std::find(obs.taken_actions.begin(), obs.taken_actions.end(), a) !=
           obs.taken_actions.end();
  };
  const std::size_t width = embedding.size() + obs.context.size() +
                            (obs.action_features.empty()
                                 ? 0
                                 : obs.action_features.front().size());
  std::vector<PairwiseExample> out;
  for (int a : obs.taken_actions) {
    for (int b : avail) {
      if (taken(b)) continue;
      PairwiseExample pos;
      pos.features.resize(width);
      pairwise_features(obs, embedding, a, b, pos.features);
      pos.label = 1;
      pos.meta = {demonstrator, obs.timestep, a, b};
      PairwiseExample neg;
      neg.features.resize(width);
      pairwise_features(obs, embedding, b, a, neg.features);
      neg.label = 0;
      neg.meta = {demonstrator, obs.timestep, b, a};
      out.push_back(std::move(pos));
      out.push_back(std::move(neg));
    }
  }
  return out;
}

std::vector<PointwiseExample> build_pointwise(
    const dataset::Observation& obs, std::span<const double> embedding) {
  std::vector<PointwiseExample> out;
  for (int a : obs.available_actions()) {
    PointwiseExample ex;
    ex.action = a;
    ex.features.assign(embedding.begin(), embedding.end());
    ex.features.insert(ex.features.end(), obs.context.begin(),
                       obs.context.end());
    const auto& xa = obs.action_features[static_cast<std::size_t>(a)];
    ex.features.insert(ex.features.end(), xa.begin(), xa.end());
    ex.label = std::find(obs.taken_actions.begin(), obs.taken_actions.end(),
                         a) != obs.taken_actions.end();
    out.push_back(std::move(ex));
  }
  return out;
}

StandardExample build_standard(const dataset::Observation& obs,
                               std::span<const double> embedding) {
  StandardExample ex;
  ex.features.assign(embedding.begin(), embedding.end());
  ex.features.insert(ex.features.end(), obs.context.begin(), obs.context.end());
  for (const auto& xa : obs.action_features) {
    ex.features.insert(ex.features.end(), xa.begin(), xa.end());
  }
  const std::size_t n = obs.action_count();
  ex.target.assign(n, 0.0);
  for (int a : obs.taken_actions) {
    ex.target[static_cast<std::size_t>(a)] =
        1.0 / static_cast<double>(obs.taken_actions.size());
  }
  ex.mask.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) ex.mask[a] = obs.is_available(a) ? 1 : 0;
  return ex;
}

ActionDistribution marginalize(const dataset::Observation& obs,
                               const std::function<double(int, int)>& score,
                               MarginalOptions options) {
  const std::vector<int> avail = obs.available_actions();
  ActionDistribution out;
  out.probabilities.assign(obs.action_count(), 0.0);
  if (avail.empty()) {
    throw std::invalid_argument("marginalize: no available actions");
  }
  if (avail.size() == 1) {
    out.probabilities[static_cast<std::size_t>(avail[0])] = 1.0;
    out.action = avail[0];
    return out;
  }
  double total = 0.0;
  for (int a : avail) {
    double row = 0.0;
    for (int b : avail) {
      if (a == b && !options.include_self_terms) continue;
      const double f = score(a, b);
      if (!(f >= 0.0 && f <= 1.0)) {
        throw std::invalid_argument("marginalize: score outside [0, 1]");
      }
      row += f;
    }
    out.probabilities[static_cast<std::size_t>(a)] = row;
    total += row;
  }
  if (total <= 0.0) {
    out.degenerate = true;
    for (int a : avail) {
      out.probabilities[static_cast<std::size_t>(a)] =
          1.0 / static_cast<double>(avail.size());
    }
  } else {
    for (double& p : out.probabilities) p /= total;
  }
  out.action = argmax(out.probabilities);
  return out;
}

ActionDistribution predict_action(
    const std::function<double(std::span<const double>)>& scorer,
    const dataset::Observation& obs, std::span<const double> embedding,
    MarginalOptions options) {
  const std::size_t width =
      embedding.size() + obs.context.size() +
      (obs.action_features.empty() ? 0 : obs.action_features.front().size());
  std::vector<double> buf(width);
  return marginalize(
      obs,
      [&](int a, int b) {
        pairwise_features(obs, embedding, a, b, buf);
        return scorer(buf);
      },
      options);
}

}  // namespace apprentice::pairwise
