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

#include "apprentice/pairwise/framing.hpp"

#include <algorithm>
#include <stdexcept>

namespace apprentice::pairwise {

std::size_t row_width(const dataset::DemonstrationSet& set, Framing framing) {
  switch (framing) {
    case Framing::kPairwise:
    case Framing::kPointwise:
      return set.context_dim + set.action_dim;
    case Framing::kStandard:
      return set.context_dim + set.action_count * set.action_dim;
  }
  return 0;
}

std::size_t output_width(const dataset::DemonstrationSet& set,
                         Framing framing) {
  return framing == Framing::kStandard ? set.action_count : 2;
}

RowSet empty_rows(const dataset::DemonstrationSet& set, const FramingSpec& spec) {
  RowSet rows;
  rows.width = row_width(set, spec.framing);
  rows.output_width = output_width(set, spec.framing);
  rows.head = spec.framing == Framing::kStandard ? spec.standard_head
                                                 : HeadKind::kSoftmax;
  return rows;
}

namespace {

void push_binary(RowSet& rows, int label, std::uint32_t owner, double weight) {
  rows.targets.push_back(label ? 0.0 : 1.0);
  rows.targets.push_back(label ? 1.0 : 0.0);
  rows.owner.push_back(owner);
  rows.weight.push_back(weight);
}

}  // namespace

void append_rows(RowSet& rows, const dataset::Observation& obs,
                 const FramingSpec& spec, std::uint32_t owner, double weight) {
  const std::span<const double> none;
  switch (spec.framing) {
    case Framing::kPairwise: {
      // A forced move carries no comparison.
      if (obs.available_actions().size() < 2) break;
      for (const auto& ex : build_pairwise(obs, none, {}, spec.labels)) {
        rows.features.insert(rows.features.end(), ex.features.begin(),
                             ex.features.end());
        push_binary(rows, ex.label, owner, weight);
      }
      break;
    }
    case Framing::kPointwise: {
      for (const auto& ex : build_pointwise(obs, none)) {
        rows.features.insert(rows.features.end(), ex.features.begin(),
                             ex.features.end());
        push_binary(rows, ex.label, owner, weight);
      }
      break;
    }
    case Framing::kStandard: {
      if (spec.labels == LabelMode::kSingle && obs.taken_actions.size() != 1) {
        throw std::invalid_argument(
            "append_rows: multi-label observation in single-label mode");
      }
      StandardExample ex = build_standard(obs, none);
      rows.features.insert(rows.features.end(), ex.features.begin(),
                           ex.features.end());
      if (rows.head == HeadKind::kBinaryHeads) {
        for (double& t : ex.target) t = t > 0.0 ? 1.0 : 0.0;
      }
      rows.targets.insert(rows.targets.end(), ex.target.begin(),
                          ex.target.end());
      rows.masks.insert(rows.masks.end(), ex.mask.begin(), ex.mask.end());
      rows.owner.push_back(owner);
      rows.weight.push_back(weight);
      break;
    }
  }
}

RowSet build_rows(const dataset::DemonstrationSet& set, const FramingSpec& spec,
                  std::span<const std::uint32_t> owners,
                  std::span<const double> schedule_weights) {
  if (owners.size() != set.schedules.size()) {
    throw std::invalid_argument("build_rows: one owner per schedule required");
  }
  if (!schedule_weights.empty() &&
      schedule_weights.size() != set.schedules.size()) {
    throw std::invalid_argument("build_rows: one weight per schedule required");
  }
  RowSet rows = empty_rows(set, spec);
  for (std::size_t s = 0; s < set.schedules.size(); ++s) {
    const double w = schedule_weights.empty() ? 1.0 : schedule_weights[s];
    if (w <= 0.0) continue;
    for (const auto& obs : set.schedules[s].observations) {
      append_rows(rows, obs, spec, owners[s], w);
    }
  }
  return rows;
}

}  // namespace apprentice::pairwise
