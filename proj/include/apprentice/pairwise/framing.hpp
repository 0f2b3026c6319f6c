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
#include <vector>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/pairwise/pairwise.hpp"

namespace apprentice::pairwise {

/// How a model's output vector is turned into probabilities and a loss.
enum class HeadKind {
  kSoftmax,      ///< one distribution over the outputs
  kBinaryHeads,  ///< independent sigmoid per output (multi-label)
};

/// Flat training matrix for one framing, without the embedding block. Each
/// row remembers which embedding (owner) it must be paired with.
struct RowSet {
  std::size_t width = 0;         ///< features per row (embedding excluded)
  std::size_t output_width = 0;  ///< K
  HeadKind head = HeadKind::kSoftmax;
  std::vector<double> features;  ///< rows * width
  std::vector<double> targets;   ///< rows * K
  std::vector<unsigned char> masks;  ///< rows * K, or empty if unmasked
  std::vector<std::uint32_t> owner;
  std::vector<double> weight;

  std::size_t rows() const { return owner.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * width, width};
  }
  std::span<const double> target(std::size_t i) const {
    return {targets.data() + i * output_width, output_width};
  }
  std::span<const unsigned char> mask(std::size_t i) const {
    if (masks.empty()) return {};
    return {masks.data() + i * output_width, output_width};
  }
};

struct FramingSpec {
  Framing framing = Framing::kPairwise;
  LabelMode labels = LabelMode::kSingle;
  /// Standard framing only: multi-label observations use sigmoid heads.
  HeadKind standard_head = HeadKind::kSoftmax;
};

/// Row width (embedding excluded) and output width for a dataset shape.
std::size_t row_width(const dataset::DemonstrationSet& set, Framing framing);
std::size_t output_width(const dataset::DemonstrationSet& set,
                         Framing framing);

/// Appends the rows of one observation.
void append_rows(RowSet& rows, const dataset::Observation& obs,
                 const FramingSpec& spec, std::uint32_t owner,
                 double weight = 1.0);

RowSet empty_rows(const dataset::DemonstrationSet& set, const FramingSpec& spec);

/// Rows for every schedule; `owners[s]` indexes schedule s's embedding.
/// `schedule_weights`, if non-empty, scales every row of schedule s.
RowSet build_rows(const dataset::DemonstrationSet& set, const FramingSpec& spec,
                  std::span<const std::uint32_t> owners,
                  std::span<const double> schedule_weights = {});

}  // namespace apprentice::pairwise
