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
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace apprentice::dataset {

enum class DomainTag { kLowDim, kScheduling, kGeneric };

const char* to_string(DomainTag tag);
DomainTag domain_from_string(const std::string& name);

/// One decision point: shared context, one feature vector per action, and
/// the action(s) the demonstrator took.
struct Observation {
  std::vector<double> context;
  std::vector<std::vector<double>> action_features;
  std::vector<int> taken_actions;
  /// Per-action availability (1 = selectable). Empty means every action is
  /// available.
  std::vector<unsigned char> available;
  std::uint64_t timestep = 0;

  std::size_t action_count() const { return action_features.size(); }
  bool is_available(std::size_t a) const {
    return available.empty() || available[a] != 0;
  }
  std::vector<int> available_actions() const;

  bool operator==(const Observation&) const = default;
};

struct Schedule {
  std::uint64_t schedule_id = 0;
  std::string demonstrator_id;
  std::vector<Observation> observations;

  bool operator==(const Schedule&) const = default;
};

struct DemonstrationSet {
  std::vector<Schedule> schedules;
  std::size_t action_count = 0;
  std::size_t context_dim = 0;
  std::size_t action_dim = 0;
  DomainTag domain = DomainTag::kGeneric;
  std::vector<std::string> context_names;
  std::vector<std::string> action_names;

  std::size_t observation_count() const;
  /// Demonstrator ids in order of first appearance.
  std::vector<std::string> demonstrators() const;

  bool operator==(const DemonstrationSet&) const = default;
};

/// Malformed data or file. `line()` is 1-based, 0 when not file-related.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Checks every structural invariant; throws DatasetError on the first
/// violation.
void validate(const DemonstrationSet& set);

inline constexpr const char* kDatasetHeader = "apprentice-dataset v1";

void write(const DemonstrationSet& set, std::ostream& out);
DemonstrationSet read(std::istream& in);

void save(const DemonstrationSet& set, const std::filesystem::path& path);
DemonstrationSet load(const std::filesystem::path& path);

/// Whole-schedule split. The train side receives round(fraction * n)
/// schedules chosen by a seeded shuffle; original order is kept on each side.
std::pair<DemonstrationSet, DemonstrationSet> split(const DemonstrationSet& set,
                                                    double train_fraction,
                                                    std::uint64_t seed);

/// Stable 64-bit fingerprint of the serialized contents.
std::uint64_t fingerprint(const DemonstrationSet& set);

}  // namespace apprentice::dataset
