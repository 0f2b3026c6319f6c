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

#include "apprentice/envs/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace apprentice::envs {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void ScenarioConfig::validate() const {
  if (task_count == 0 || agent_count == 0) {
    throw std::invalid_argument("scenario: need at least one task and agent");
  }
  if (!(area_side > 0.0) || !(travel_speed > 0.0)) {
    throw std::invalid_argument("scenario: area_side and travel_speed > 0");
  }
  if (!(duration_min > 0.0 && duration_max >= duration_min)) {
    throw std::invalid_argument("scenario: bad duration range");
  }
  if (!(deadline_min > 0.0 && deadline_max >= deadline_min)) {
    throw std::invalid_argument("scenario: bad deadline range");
  }
  if (!(wait_fraction >= 0.0 && wait_fraction <= 1.0)) {
    throw std::invalid_argument("scenario: wait_fraction outside [0, 1]");
  }
  if (!(proximity_radius >= 0.0) || !(wait_max >= 0.0)) {
    throw std::invalid_argument("scenario: negative radius or wait bound");
  }
}

const char* to_string(Infeasibility reason) {
  switch (reason) {
    case Infeasibility::kNone: return "feasible";
    case Infeasibility::kAgentBusy: return "agent busy";
    case Infeasibility::kTaskAssigned: return "task already assigned";
    case Infeasibility::kWaitConstraint: return "wait constraint not elapsed";
    case Infeasibility::kDeadline: return "deadline unreachable";
    case Infeasibility::kProximity: return "too close to another agent";
  }
  return "?";
}

SchedulingScenario::SchedulingScenario(ScenarioConfig config,
                                       std::vector<Task> tasks,
                                       std::vector<AgentState> agents)
    : config_(config),
      tasks_(std::move(tasks)),
      agents_(std::move(agents)),
      assigned_(tasks_.size(), false),
      finish_(tasks_.size(), 0.0) {
  config_.validate();
  if (tasks_.size() != config_.task_count ||
      agents_.size() != config_.agent_count) {
    throw std::invalid_argument("scenario: task/agent count mismatch");
  }
}

SchedulingScenario SchedulingScenario::random(const ScenarioConfig& config,
                                              Rng& rng) {
  config.validate();
  std::uniform_real_distribution<double> coord(0.0, config.area_side);
  std::uniform_real_distribution<double> dur(config.duration_min,
                                             config.duration_max);
  std::uniform_real_distribution<double> dl(config.deadline_min,
                                            config.deadline_max);
  std::uniform_real_distribution<double> wait(0.0, config.wait_max);

  std::vector<Task> tasks(config.task_count);
  for (auto& t : tasks) {
    t.location = {coord(rng), coord(rng)};
    t.duration = dur(rng);
    t.deadline = dl(rng);
  }
  // Exactly round(wait_fraction * n) tasks carry a wait constraint.
  std::vector<std::size_t> order(config.task_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_wait = static_cast<std::size_t>(
      std::llround(config.wait_fraction * double(config.task_count)));
  for (std::size_t i = 0; i < n_wait; ++i) {
    Task& t = tasks[order[i]];
    t.has_wait_constraint = true;
    t.earliest_start = wait(rng);
  }

  std::vector<AgentState> agents(config.agent_count);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    for (;;) {
      Point p{coord(rng), coord(rng)};
      bool clear = true;
      for (std::size_t m = 0; m < k; ++m) {
        if (distance(p, agents[m].position) < config.proximity_radius) {
          clear = false;
        }
      }
      if (clear) {
        agents[k].position = p;
        break;
      }
    }
  }
  return SchedulingScenario(config, std::move(tasks), std::move(agents));
}

std::vector<std::size_t> SchedulingScenario::completed() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < tasks_.size(); ++j) {
    if (assigned_[j] && finish_[j] <= now_) out.push_back(j);
  }
  return out;
}

std::size_t SchedulingScenario::remaining() const {
  return static_cast<std::size_t>(
      std::count(assigned_.begin(), assigned_.end(), false));
}

double SchedulingScenario::travel_time(std::size_t agent,
                                       std::size_t task) const {
  return distance(agents_.at(agent).position, tasks_.at(task).location) /
         config_.travel_speed;
}

Infeasibility SchedulingScenario::check(std::size_t agent,
                                        std::size_t task) const {
  const Task& t = tasks_.at(task);
  if (assigned_.at(task)) return Infeasibility::kTaskAssigned;
  if (agents_.at(agent).busy_until > now_) return Infeasibility::kAgentBusy;
  if (t.earliest_start > now_) return Infeasibility::kWaitConstraint;
  if (now_ + travel_time(agent, task) + t.duration > t.deadline) {
    return Infeasibility::kDeadline;
  }
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    if (k == agent) continue;
    if (distance(t.location, agents_[k].position) < config_.proximity_radius) {
      return Infeasibility::kProximity;
    }
  }
  return Infeasibility::kNone;
}

std::pair<double, double> SchedulingScenario::assign(std::size_t agent,
                                                     std::size_t task) {
  const Infeasibility why = check(agent, task);
  if (why != Infeasibility::kNone) {
    std::ostringstream os;
    os << "scenario: cannot dispatch agent " << agent << " to task " << task
       << ": " << to_string(why);
    throw std::logic_error(os.str());
  }
  const double arrival = now_ + travel_time(agent, task);
  const double finish = arrival + tasks_[task].duration;
  agents_[agent].position = tasks_[task].location;
  agents_[agent].busy_until = finish;
  assigned_[task] = true;
  finish_[task] = finish;
  return {arrival, finish};
}

bool SchedulingScenario::advance() {
  double next = std::numeric_limits<double>::infinity();
  for (const auto& a : agents_) {
    if (a.busy_until > now_) next = std::min(next, a.busy_until);
  }
  for (std::size_t j = 0; j < tasks_.size(); ++j) {
    if (!assigned_[j] && tasks_[j].earliest_start > now_) {
      next = std::min(next, tasks_[j].earliest_start);
    }
  }
  if (!std::isfinite(next)) return false;
  now_ = next;
  return true;
}

std::vector<std::string> SchedulingScenario::context_names() {
  return {"current_time", "agent0_time_to_free", "agent1_time_to_free",
          "remaining_tasks"};
}

std::vector<std::string> SchedulingScenario::action_names() {
  return {"time_to_deadline", "distance",   "index",         "neg_index",
          "wait_slack",       "feasible",   "nearest_agent"};
}

std::vector<double> SchedulingScenario::context_features() const {
  std::vector<double> out{now_};
  for (std::size_t k = 0; k < 2; ++k) {
    out.push_back(k < agents_.size()
                      ? std::max(0.0, agents_[k].busy_until - now_)
                      : 0.0);
  }
  out.push_back(static_cast<double>(remaining()));
  return out;
}

std::vector<double> SchedulingScenario::action_features(
    std::size_t agent, std::size_t task) const {
  const Task& t = tasks_.at(task);
  const double j = static_cast<double>(task);
  const double d = distance(agents_.at(agent).position, t.location);
  bool nearest = true;
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    const double dk = distance(agents_[k].position, t.location);
    if (k != agent && (dk < d || (dk == d && k < agent))) nearest = false;
  }
  return {t.deadline - now_,
          d,
          j,
          -j,
          now_ - t.earliest_start,
          schedulable(agent, task) ? 1.0 : 0.0,
          nearest ? 1.0 : 0.0};
}

ExpertProfile BetaSampler::sample(Rng& rng) const {
  std::uniform_real_distribution<double> b1(0.0, beta1_max);
  std::uniform_real_distribution<double> b2(0.0, beta2_max);
  std::bernoulli_distribution b3(beta3_probability);
  ExpertProfile p;
  p.beta1 = b1(rng);
  p.beta2 = b2(rng);
  p.beta3 = b3(rng) ? 1 : 0;
  return p;
}

double heuristic_edf(const SchedulingScenario& s, std::size_t task) {
  return -s.tasks().at(task).deadline / s.config().deadline_max;
}

double heuristic_distance(const SchedulingScenario& s, std::size_t agent,
                          std::size_t task) {
  const double diagonal = std::sqrt(2.0) * s.config().area_side;
  return -distance(s.agents().at(agent).position, s.tasks().at(task).location) /
         diagonal;
}

double heuristic_index(std::size_t task, int beta3) {
  const double j = static_cast<double>(task);
  return beta3 * j + (1 - beta3) * (-j);
}

double expert_priority(const SchedulingScenario& s, std::size_t agent,
                       std::size_t task, const ExpertProfile& profile) {
  const Infeasibility why = s.check(agent, task);
  if (why != Infeasibility::kNone) {
    std::ostringstream os;
    os << "expert_priority: agent " << agent << " / task " << task
       << " is not schedulable (" << to_string(why) << ")";
    throw std::invalid_argument(os.str());
  }
  return profile.beta1 * heuristic_edf(s, task) +
         profile.beta2 * heuristic_distance(s, agent, task) +
         heuristic_index(task, profile.beta3);
}

namespace {

struct Choice {
  std::size_t agent = 0;
  std::size_t task = 0;
  bool found = false;
};

// Argmax over feasible pairs; strict '>' keeps the lowest (agent, task).
Choice best_pair(const SchedulingScenario& s, const ExpertProfile& profile,
                 std::size_t skip_agent = std::numeric_limits<std::size_t>::max()) {
  Choice best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.agents().size(); ++k) {
    if (k == skip_agent) continue;
    for (std::size_t j = 0; j < s.tasks().size(); ++j) {
      if (!s.schedulable(k, j)) continue;
      const double score = expert_priority(s, k, j, profile);
      if (!best.found || score > best_score) {
        best = {k, j, true};
        best_score = score;
      }
    }
  }
  return best;
}

dataset::Observation snapshot(const SchedulingScenario& s,
                              std::uint64_t timestep) {
  dataset::Observation obs;
  obs.timestep = timestep;
  obs.context = s.context_features();
  obs.action_features.reserve(s.action_count());
  obs.available.assign(s.action_count(), 0);
  for (std::size_t k = 0; k < s.agents().size(); ++k) {
    for (std::size_t j = 0; j < s.tasks().size(); ++j) {
      obs.action_features.push_back(s.action_features(k, j));
      obs.available[s.action_id(k, j)] = s.schedulable(k, j) ? 1 : 0;
    }
  }
  return obs;
}

}  // namespace

Rollout rollout_expert(SchedulingScenario scenario,
                       const ExpertProfile& profile, std::uint64_t schedule_id,
                       const std::string& demonstrator_id, bool multi_label) {
  Rollout out;
  out.tasks = scenario.tasks();
  out.initial_agents = scenario.agents();
  out.schedule.schedule_id = schedule_id;
  out.schedule.demonstrator_id = demonstrator_id;

  auto dispatch = [&](const Choice& c) {
    Dispatch d;
    d.agent = c.agent;
    d.task = c.task;
    d.decision_time = scenario.current_time();
    std::tie(d.arrival, d.finish) = scenario.assign(c.agent, c.task);
    out.trace.push_back(d);
  };

  std::uint64_t timestep = 0;
  while (!scenario.done()) {
    if (multi_label) {
      // Synchronous rounds: wait until every agent is free.
      double all_free = scenario.current_time();
      for (const auto& a : scenario.agents()) {
        all_free = std::max(all_free, a.busy_until);
      }
      while (scenario.current_time() < all_free) {
        if (!scenario.advance()) break;
      }
    }
    const Choice first = best_pair(scenario, profile);
    if (!first.found) {
      if (!scenario.advance()) {
        std::ostringstream os;
        os << "rollout: deadlock at t=" << scenario.current_time() << " with "
           << scenario.remaining() << " tasks left";
        throw DeadlockError(os.str());
      }
      continue;
    }
    dataset::Observation obs = snapshot(scenario, timestep++);
    obs.taken_actions = {static_cast<int>(scenario.action_id(first.agent,
                                                             first.task))};
    dispatch(first);
    if (multi_label && !scenario.done()) {
      const Choice second = best_pair(scenario, profile, first.agent);
      if (second.found) {
        const auto id = scenario.action_id(second.agent, second.task);
        obs.taken_actions.push_back(static_cast<int>(id));
        obs.available[id] = 1;
        dispatch(second);
      }
    }
    out.schedule.observations.push_back(std::move(obs));
  }
  return out;
}

std::vector<std::string> verify_rollout(const Rollout& rollout,
                                        const ScenarioConfig& config) {
  std::vector<std::string> problems;
  auto report = [&](const std::string& msg) { problems.push_back(msg); };
  const auto& tasks = rollout.tasks;
  const std::size_t n_agents = rollout.initial_agents.size();

  std::vector<int> seen(tasks.size(), 0);
  for (const auto& d : rollout.trace) {
    if (d.task >= tasks.size() || d.agent >= n_agents) {
      report("dispatch references unknown agent or task");
      return problems;
    }
    ++seen[d.task];
  }
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    if (seen[j] != 1) {
      report("task " + std::to_string(j) + " dispatched " +
             std::to_string(seen[j]) + " times");
    }
  }

  // Presence intervals: an agent sits at a location from arrival until its
  // next departure (or forever after its last task).
  struct Presence {
    std::size_t agent;
    Point where;
    double from;
    double to;
  };
  std::vector<Presence> presence;
  constexpr double kTol = 1e-9;
  const double inf = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n_agents; ++k) {
    std::vector<Dispatch> mine;
    for (const auto& d : rollout.trace) {
      if (d.agent == k) mine.push_back(d);
    }
    std::stable_sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) {
      return a.decision_time < b.decision_time;
    });
    Point pos = rollout.initial_agents[k].position;
    double free_at = 0.0;
    double here_since = 0.0;
    for (const auto& d : mine) {
      const Task& t = tasks[d.task];
      const std::string tag = "agent " + std::to_string(k) + " task " +
                              std::to_string(d.task) + ": ";
      if (d.decision_time + kTol < free_at) {
        report(tag + "dispatched while still busy");
      }
      if (d.decision_time + kTol < t.earliest_start) {
        report(tag + "started before its wait constraint elapsed");
      }
      const double expected_arrival =
          d.decision_time + distance(pos, t.location) / config.travel_speed;
      if (std::abs(d.arrival - expected_arrival) > 1e-7) {
        report(tag + "travel time inconsistent with distance");
      }
      if (std::abs(d.finish - (d.arrival + t.duration)) > 1e-7) {
        report(tag + "finish inconsistent with duration");
      }
      if (d.finish > t.deadline + kTol) {
        report(tag + "missed its deadline");
      }
      presence.push_back({k, pos, here_since, d.decision_time});
      pos = t.location;
      here_since = d.arrival;
      free_at = d.finish;
    }
    presence.push_back({k, pos, here_since, inf});
  }

  for (std::size_t a = 0; a < presence.size(); ++a) {
    for (std::size_t b = a + 1; b < presence.size(); ++b) {
      const auto& p = presence[a];
      const auto& q = presence[b];
      if (p.agent == q.agent) continue;
      const double overlap = std::min(p.to, q.to) - std::max(p.from, q.from);
      if (overlap <= 1e-12) continue;
      if (distance(p.where, q.where) < config.proximity_radius) {
        std::ostringstream os;
        os << "agents " << p.agent << " and " << q.agent
           << " within proximity radius during [" << std::max(p.from, q.from)
           << ", " << std::min(p.to, q.to) << "]";
        report(os.str());
      }
    }
  }
  return problems;
}

SchedulingData generate_scheduling_with_profiles(std::size_t count,
                                                 const BetaSampler& sampler,
                                                 std::uint64_t seed,
                                                 const ScenarioConfig& config,
                                                 bool multi_label) {
  if (count == 0) {
    throw std::invalid_argument("generate_scheduling: count must be >= 1");
  }
  config.validate();
  constexpr std::size_t kMaxAttempts = 1000;
  SchedulingData data;
  auto& set = data.set;
  set.domain = dataset::DomainTag::kScheduling;
  set.action_count = config.task_count * config.agent_count;
  set.context_dim = SchedulingScenario::kContextDim;
  set.action_dim = SchedulingScenario::kActionDim;
  set.context_names = SchedulingScenario::context_names();
  set.action_names = SchedulingScenario::action_names();

  for (std::size_t s = 0; s < count; ++s) {
    const std::uint64_t schedule_seed = derive_seed(seed, s);
    Rng profile_rng(schedule_seed);
    const ExpertProfile profile = sampler.sample(profile_rng);
    const std::string who = "sched-" + std::to_string(s);
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw DeadlockError("generate_scheduling: schedule " +
                            std::to_string(s) + " deadlocked " +
                            std::to_string(kMaxAttempts) + " times");
      }
      Rng rng(derive_seed(schedule_seed, attempt + 1));
      try {
        Rollout r = rollout_expert(SchedulingScenario::random(config, rng),
                                   profile, s, who, multi_label);
        set.schedules.push_back(r.schedule);
        data.rollouts.push_back(std::move(r));
        data.profiles.push_back(profile);
        break;
      } catch (const DeadlockError&) {
        ++data.deadlocks;
      }
    }
  }
  return data;
}

dataset::DemonstrationSet generate_scheduling(std::size_t count,
                                              const BetaSampler& sampler,
                                              std::uint64_t seed,
                                              const ScenarioConfig& config,
                                              bool multi_label) {
  return generate_scheduling_with_profiles(count, sampler, seed, config,
                                           multi_label)
      .set;
}

}  // namespace apprentice::envs
