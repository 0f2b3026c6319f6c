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

#include "apprentice/dataset/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "apprentice/diffcore/rng.hpp"
#include "json.hpp"

namespace apprentice::dataset {

using nlohmann::json;

const char* to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::kLowDim: return "lowdim";
    case DomainTag::kScheduling: return "scheduling";
    case DomainTag::kGeneric: return "generic";
  }
  return "generic";
}

DomainTag domain_from_string(const std::string& name) {
  if (name == "lowdim") return DomainTag::kLowDim;
  if (name == "scheduling") return DomainTag::kScheduling;
  if (name == "generic") return DomainTag::kGeneric;
  throw DatasetError("unknown domain '" + name + "'");
}

std::vector<int> Observation::available_actions() const {
  std::vector<int> out;
  for (std::size_t a = 0; a < action_count(); ++a) {
    if (is_available(a)) out.push_back(static_cast<int>(a));
  }
  return out;
}

std::size_t DemonstrationSet::observation_count() const {
  std::size_t n = 0;
  for (const auto& s : schedules) n += s.observations.size();
  return n;
}

std::vector<std::string> DemonstrationSet::demonstrators() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : schedules) {
    if (seen.insert(s.demonstrator_id).second) out.push_back(s.demonstrator_id);
  }
  return out;
}

DatasetError::DatasetError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                              : what),
      line_(line) {}

namespace {

void check_observation(const DemonstrationSet& set, const Observation& obs,
                       std::size_t line) {
  if (obs.context.size() != set.context_dim) {
    throw DatasetError("context has " + std::to_string(obs.context.size()) +
                           " values, expected " +
                           std::to_string(set.context_dim),
                       line);
  }
  if (obs.action_features.size() != set.action_count) {
    throw DatasetError("observation lists " +
                           std::to_string(obs.action_features.size()) +
                           " actions, expected " +
                           std::to_string(set.action_count),
                       line);
  }
  for (const auto& f : obs.action_features) {
    if (f.size() != set.action_dim) {
      throw DatasetError("action feature vector has " +
                             std::to_string(f.size()) + " values, expected " +
                             std::to_string(set.action_dim),
                         line);
    }
    for (double v : f) {
      if (!std::isfinite(v)) throw DatasetError("non-finite feature", line);
    }
  }
  for (double v : obs.context) {
    if (!std::isfinite(v)) throw DatasetError("non-finite context", line);
  }
  if (!obs.available.empty() && obs.available.size() != set.action_count) {
    throw DatasetError("availability mask has wrong length", line);
  }
  if (obs.taken_actions.empty()) {
    throw DatasetError("observation has no taken action", line);
  }
  for (int a : obs.taken_actions) {
    if (a < 0 || static_cast<std::size_t>(a) >= set.action_count) {
      throw DatasetError("taken action " + std::to_string(a) + " out of range",
                         line);
    }
    if (!obs.is_available(static_cast<std::size_t>(a))) {
      throw DatasetError("taken action " + std::to_string(a) +
                             " is marked unavailable",
                         line);
    }
  }
}

}  // namespace

void validate(const DemonstrationSet& set) {
  if (set.action_count == 0) throw DatasetError("no actions");
  if (!set.context_names.empty() &&
      set.context_names.size() != set.context_dim) {
    throw DatasetError("context_names length does not match context_dim");
  }
  if (!set.action_names.empty() && set.action_names.size() != set.action_dim) {
    throw DatasetError("action_names length does not match action_dim");
  }
  for (const auto& s : set.schedules) {
    if (s.observations.empty()) {
      throw DatasetError("schedule " + std::to_string(s.schedule_id) +
                         " has no observations");
    }
    if (set.domain == DomainTag::kLowDim && s.observations.size() != 20) {
      throw DatasetError("low-dimensional schedule " +
                         std::to_string(s.schedule_id) +
                         " must hold exactly 20 observations");
    }
    for (std::size_t i = 0; i < s.observations.size(); ++i) {
      if (i > 0 &&
          s.observations[i].timestep <= s.observations[i - 1].timestep) {
        throw DatasetError("schedule " + std::to_string(s.schedule_id) +
                           ": timesteps must be strictly increasing");
      }
      check_observation(set, s.observations[i], 0);
    }
  }
}

void write(const DemonstrationSet& set, std::ostream& out) {
  validate(set);
  out << kDatasetHeader << '\n';
  json meta = {{"domain", to_string(set.domain)},
               {"action_count", set.action_count},
               {"context_dim", set.context_dim},
               {"action_dim", set.action_dim},
               {"context_names", set.context_names},
               {"action_names", set.action_names},
               {"schedules", set.schedules.size()}};
  out << meta.dump() << '\n';
  for (const auto& s : set.schedules) {
    for (const auto& o : s.observations) {
      json rec = {{"schedule_id", s.schedule_id},
                  {"demonstrator_id", s.demonstrator_id},
                  {"timestep", o.timestep},
                  {"context", o.context},
                  {"action_features", o.action_features},
                  {"taken_actions", o.taken_actions}};
      if (!o.available.empty()) {
        std::vector<int> mask(o.available.begin(), o.available.end());
        rec["available"] = mask;
      }
      out << rec.dump() << '\n';
    }
  }
}

DemonstrationSet read(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DatasetError("empty file", 1);
  if (line != kDatasetHeader) {
    if (line.rfind("apprentice-dataset", 0) == 0) {
      throw DatasetError("unsupported schema version '" + line + "'", 1);
    }
    throw DatasetError("missing header '" + std::string(kDatasetHeader) + "'",
                       1);
  }
  DemonstrationSet set;
  ++line_no;
  if (!std::getline(in, line)) throw DatasetError("missing metadata", line_no);
  std::size_t declared_schedules = 0;
  try {
    const json meta = json::parse(line);
    set.domain = domain_from_string(meta.at("domain").get<std::string>());
    set.action_count = meta.at("action_count").get<std::size_t>();
    set.context_dim = meta.at("context_dim").get<std::size_t>();
    set.action_dim = meta.at("action_dim").get<std::size_t>();
    set.context_names =
        meta.value("context_names", std::vector<std::string>{});
    set.action_names = meta.value("action_names", std::vector<std::string>{});
    declared_schedules = meta.value("schedules", std::size_t{0});
  } catch (const DatasetError& e) {
    throw DatasetError(e.what(), line_no);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed metadata: ") + e.what(),
                       line_no);
  }
  if (set.action_count == 0) throw DatasetError("no actions", line_no);

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Observation obs;
    std::uint64_t schedule_id = 0;
    std::string demonstrator;
    try {
      const json rec = json::parse(line);
      schedule_id = rec.at("schedule_id").get<std::uint64_t>();
      demonstrator = rec.at("demonstrator_id").get<std::string>();
      obs.timestep = rec.at("timestep").get<std::uint64_t>();
      obs.context = rec.at("context").get<std::vector<double>>();
      obs.action_features =
          rec.at("action_features").get<std::vector<std::vector<double>>>();
      obs.taken_actions = rec.at("taken_actions").get<std::vector<int>>();
      if (rec.contains("available")) {
        for (int v : rec.at("available").get<std::vector<int>>()) {
          obs.available.push_back(v != 0 ? 1 : 0);
        }
      }
    } catch (const json::exception& e) {
      throw DatasetError(std::string("malformed record: ") + e.what(),
                         line_no);
    }
    check_observation(set, obs, line_no);
    if (set.schedules.empty() ||
        set.schedules.back().schedule_id != schedule_id) {
      for (const auto& s : set.schedules) {
        if (s.schedule_id == schedule_id) {
          throw DatasetError("records of schedule " +
                                 std::to_string(schedule_id) +
                                 " are not contiguous",
                             line_no);
        }
      }
      Schedule s;
      s.schedule_id = schedule_id;
      s.demonstrator_id = demonstrator;
      set.schedules.push_back(std::move(s));
    } else if (set.schedules.back().demonstrator_id != demonstrator) {
      throw DatasetError("demonstrator changes inside schedule", line_no);
    }
    auto& obs_list = set.schedules.back().observations;
    if (!obs_list.empty() && obs.timestep <= obs_list.back().timestep) {
      throw DatasetError("timesteps must be strictly increasing", line_no);
    }
    obs_list.push_back(std::move(obs));
  }
  if (declared_schedules != set.schedules.size()) {
    throw DatasetError("metadata declares " +
                           std::to_string(declared_schedules) +
                           " schedules, file holds " +
                           std::to_string(set.schedules.size()),
                       line_no);
  }
  validate(set);
  return set;
}

void save(const DemonstrationSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot open '" + path.string() + "' for writing");
  write(set, out);
  if (!out) throw DatasetError("write to '" + path.string() + "' failed");
}

DemonstrationSet load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path.string() + "'");
  return read(in);
}

std::pair<DemonstrationSet, DemonstrationSet> split(const DemonstrationSet& set,
                                                    double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  }
  const std::size_t n = set.schedules.size();
  if (n < 2) throw std::invalid_argument("split: need at least 2 schedules");
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * double(n)));
  if (n_train == 0 || n_train == n) {
    throw std::invalid_argument("split: fraction leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  DemonstrationSet train = set;
  DemonstrationSet test = set;
  train.schedules.clear();
  test.schedules.clear();
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : test).schedules.push_back(set.schedules[i]);
  }
  return {std::move(train), std::move(test)};
}

std::uint64_t fingerprint(const DemonstrationSet& set) {
  std::ostringstream os;
  write(set, os);
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace apprentice::dataset
