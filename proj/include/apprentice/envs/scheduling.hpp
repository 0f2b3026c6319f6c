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
#include <stdexcept>
#include <string>
#include <vector>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/diffcore/rng.hpp"

namespace apprentice::envs {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

/// Geometry and timing of generated scenarios. Time is measured in units of
/// the nominal makespan, so deadlines drawn from [deadline_min, deadline_max]
/// are multiples of the expected schedule duration.
struct ScenarioConfig {
  std::size_t task_count = 20;
  std::size_t agent_count = 2;
  double area_side = 10.0;
  /// Spatial units covered per unit of time.
  double travel_speed = 100.0;
  double duration_min = 0.02;
  double duration_max = 0.06;
  double deadline_min = 1.0;
  double deadline_max = 4.0;
  double wait_fraction = 0.25;
  /// Latest earliest-start time of a wait-constrained task.
  double wait_max = 0.5;
  /// Two agents may never be present within this radius of each other.
  double proximity_radius = 1.0;

  void validate() const;
};

struct Task {
  Point location;
  double duration = 0.0;
  double deadline = 0.0;
  /// Earliest permitted start; 0 for tasks without a wait constraint.
  double earliest_start = 0.0;
  bool has_wait_constraint = false;
};

struct AgentState {
  /// Where the agent is, or where it is heading when busy.
  Point position;
  double busy_until = 0.0;
};

/// Why an (agent, task) pair cannot be dispatched right now.
enum class Infeasibility {
  kNone,
  kAgentBusy,
  kTaskAssigned,
  kWaitConstraint,
  kDeadline,
  kProximity,
};

const char* to_string(Infeasibility reason);

/// Live state of a two-agent, twenty-task dispatch problem with deadlines,
/// wait constraints, proximity constraints and travel times.
class SchedulingScenario {
 public:
  SchedulingScenario(ScenarioConfig config, std::vector<Task> tasks,
                     std::vector<AgentState> agents);

  static SchedulingScenario random(const ScenarioConfig& config, Rng& rng);

  const ScenarioConfig& config() const { return config_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  double current_time() const { return now_; }
  bool assigned(std::size_t task) const { return assigned_.at(task); }
  /// Tasks whose work has finished by current_time().
  std::vector<std::size_t> completed() const;
  std::size_t remaining() const;
  bool done() const { return remaining() == 0; }

  double travel_time(std::size_t agent, std::size_t task) const;
  Infeasibility check(std::size_t agent, std::size_t task) const;
  bool schedulable(std::size_t agent, std::size_t task) const {
    return check(agent, task) == Infeasibility::kNone;
  }

  std::size_t action_count() const {
    return config_.task_count * config_.agent_count;
  }
  std::size_t action_id(std::size_t agent, std::size_t task) const {
    return agent * config_.task_count + task;
  }

  /// Dispatches `agent` to `task` at the current time. Returns the
  /// (arrival, finish) times. Throws std::logic_error if infeasible.
  std::pair<double, double> assign(std::size_t agent, std::size_t task);

  /// Advances time to the next event that could unlock a dispatch. Returns
  /// false if no such event exists (deadlock).
  bool advance();

  static constexpr std::size_t kContextDim = 4;
  static constexpr std::size_t kActionDim = 7;
  static std::vector<std::string> context_names();
  static std::vector<std::string> action_names();

  /// [current_time, agent0 time-to-free, agent1 time-to-free, remaining].
  std::vector<double> context_features() const;
  /// [time_to_deadline, distance, index, -index, wait_slack, feasible,
  ///  nearest_agent].
  std::vector<double> action_features(std::size_t agent,
                                      std::size_t task) const;

 private:
  ScenarioConfig config_;
  std::vector<Task> tasks_;
  std::vector<AgentState> agents_;
  std::vector<bool> assigned_;
  std::vector<double> finish_;
  double now_ = 0.0;
};

/// Latent preference vector of a mock expert.
struct ExpertProfile {
  double beta1 = 0.0;
  double beta2 = 0.0;
  int beta3 = 0;
};

struct BetaSampler {
  double beta1_max = 2.0;
  double beta2_max = 2.0;
  double beta3_probability = 0.5;

  ExpertProfile sample(Rng& rng) const;
};

/// H_EDF: earlier deadline -> higher score; -deadline / deadline_max.
double heuristic_edf(const SchedulingScenario& s, std::size_t task);
/// H_distance: closer task -> higher score; -distance / area diagonal.
double heuristic_distance(const SchedulingScenario& s, std::size_t agent,
                          std::size_t task);
/// H_Index: beta3 * j + (1 - beta3) * (-j).
double heuristic_index(std::size_t task, int beta3);

/// beta1 * H_EDF + beta2 * H_distance + H_Index. Throws std::invalid_argument
/// if the pair is not schedulable.
double expert_priority(const SchedulingScenario& s, std::size_t agent,
                       std::size_t task, const ExpertProfile& profile);

/// One dispatch in a rollout, kept for independent constraint checking.
struct Dispatch {
  std::size_t agent = 0;
  std::size_t task = 0;
  double decision_time = 0.0;
  double arrival = 0.0;
  double finish = 0.0;
};

struct Rollout {
  dataset::Schedule schedule;
  std::vector<Dispatch> trace;
  /// Scenario as it was before the first decision.
  std::vector<Task> tasks;
  std::vector<AgentState> initial_agents;
};

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Greedy argmax rollout of a mock expert. In multi-label mode both agents
/// are dispatched together each round and both actions are recorded on one
/// observation. Ties go to the lowest (agent, task).
Rollout rollout_expert(SchedulingScenario scenario,
                       const ExpertProfile& profile,
                       std::uint64_t schedule_id = 0,
                       const std::string& demonstrator_id = "expert",
                       bool multi_label = false);

/// Returns human-readable descriptions of every violated deadline, wait,
/// travel-time or proximity constraint in a finished rollout. Empty means
/// the trajectory is valid. Independent of the simulator's own checks.
std::vector<std::string> verify_rollout(const Rollout& rollout,
                                        const ScenarioConfig& config);

struct SchedulingData {
  dataset::DemonstrationSet set;
  std::vector<ExpertProfile> profiles;
  std::vector<Rollout> rollouts;
  std::size_t deadlocks = 0;
};

SchedulingData generate_scheduling_with_profiles(
    std::size_t count, const BetaSampler& sampler, std::uint64_t seed,
    const ScenarioConfig& config = {}, bool multi_label = false);

dataset::DemonstrationSet generate_scheduling(std::size_t count,
                                              const BetaSampler& sampler,
                                              std::uint64_t seed,
                                              const ScenarioConfig& config = {},
                                              bool multi_label = false);

}  // namespace apprentice::envs
