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

#include "property_checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "apprentice/actionrep/actionrep.hpp"
#include "apprentice/dataset/dataset.hpp"
#include "apprentice/diffcore/rng.hpp"
#include "apprentice/diffcore/tape.hpp"
#include "apprentice/envs/lowdim.hpp"
#include "apprentice/envs/scheduling.hpp"
#include "apprentice/pairwise/framing.hpp"
#include "apprentice/pairwise/pairwise.hpp"
#include "apprentice/pddt/pddt.hpp"
#include "apprentice/pnn/personalized_model.hpp"

namespace apprentice::checks {
namespace {

using dataset::DemonstrationSet;
using pairwise::LabelMode;

CheckResult make(std::string name, bool passed, const std::string& detail) {
  return {std::move(name), passed, detail};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Worst relative error between `analytic` and central differences of `f`
// with respect to every entry of `values`.
double worst_difference(std::vector<double>& values,
                        const std::vector<double>& analytic,
                        const std::function<double()>& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + kFiniteStep;
    const double up = f();
    values[i] = saved - kFiniteStep;
    const double down = f();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * kFiniteStep);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

DemonstrationSet scheduling_data(std::size_t count, std::uint64_t seed,
                                 bool multi_label) {
  return envs::generate_scheduling(count, envs::BetaSampler{}, seed, {},
                                   multi_label);
}

LabelMode labels_for(bool multi_label) {
  return multi_label ? LabelMode::kMulti : LabelMode::kSingle;
}

// Loss of a few framed rows of `model` on `set`, with analytic gradients
// compared to finite differences for every parameter and embedding value.
double model_gradient_error(pnn::PersonalizedModel& model,
                            const DemonstrationSet& set) {
  Rng rng(5);
  std::vector<std::uint32_t> owners;
  for (const auto& s : set.schedules) {
    owners.push_back(static_cast<std::uint32_t>(
        model.embeddings().ensure(s.demonstrator_id, rng, 0.5)));
  }
  const auto rows =
      pairwise::build_rows(set, model.spec().framing_spec(), owners);
  model.core().set_scaler(
      pnn::fit_scaler(rows, model.spec().embedding_dim));
  pnn::RowObjective objective(model, rows);
  std::vector<std::size_t> picked;
  const std::size_t n = std::min<std::size_t>(24, rows.rows());
  for (std::size_t i = 0; i < n; ++i) picked.push_back(i * rows.rows() / n);

  auto blocks = model.core().parameters();
  blocks.push_back(&model.embeddings().block());
  for (auto* b : blocks) b->zero_grad();
  objective.evaluate(picked, true);
  auto loss = [&] { return objective.evaluate(picked, false); };
  double worst = 0.0;
  for (auto* b : blocks) {
    const std::vector<double> analytic = b->gradient;
    worst = std::max(worst, worst_difference(b->value, analytic, loss));
  }
  return worst;
}

double oracle_priority(const envs::SchedulingScenario& s, std::size_t agent,
                       std::size_t task, const envs::ExpertProfile& p) {
  const auto& t = s.tasks()[task];
  const auto& a = s.agents()[agent];
  const double dx = a.position.x - t.location.x;
  const double dy = a.position.y - t.location.y;
  const double side = s.config().area_side;
  const double edf = -t.deadline / s.config().deadline_max;
  const double dist = -std::sqrt(dx * dx + dy * dy) / std::sqrt(2.0 * side * side);
  const double j = static_cast<double>(task);
  return p.beta1 * edf + p.beta2 * dist + (p.beta3 == 1 ? j : -j);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), kGradientFloor});
  return std::abs(analytic - numeric) / scale;
}

CheckResult check_random_tapes(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> op_pick(0, 11);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  std::size_t nodes = 0;
  for (std::size_t t = 0; t < count; ++t) {
    diffcore::Tape tape;
    std::vector<diffcore::Var> pool;
    for (int i = 0; i < 3; ++i) pool.push_back(tape.input());
    for (int i = 0; i < 3; ++i) pool.push_back(tape.parameter(normal(rng)));
    // Three layers, each combining random members of everything built so far.
    for (int layer = 0; layer < 3; ++layer) {
      std::vector<diffcore::Var> fresh;
      for (int k = 0; k < 4; ++k) {
        std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
        const auto a = pool[any(rng)];
        const auto b = pool[any(rng)];
        diffcore::Var v;
        switch (op_pick(rng)) {
          case 0: v = tape.add(a, b); break;
          case 1: v = tape.sub(a, b); break;
          case 2: v = tape.mul(tape.tanh(a), b); break;
          case 3:
            v = tape.div(a, tape.add(tape.constant(2.0), tape.tanh(b)));
            break;
          case 4: v = tape.neg(a); break;
          case 5: v = tape.exp(tape.tanh(a)); break;
          case 6:
            v = tape.log(tape.add(tape.constant(1.5), tape.tanh(a)));
            break;
          case 7: v = tape.max(a, b); break;
          case 8: v = tape.sigmoid(a); break;
          case 9: v = tape.tanh(a); break;
          case 10: v = tape.relu(a); break;
          default: v = tape.mul(tape.sigmoid(a), tape.sigmoid(b)); break;
        }
        fresh.push_back(v);
      }
      pool.insert(pool.end(), fresh.begin(), fresh.end());
    }
    tape.mark_output(pool.back());
    tape.mark_output(pool[pool.size() - 2]);
    std::vector<double> inputs(3);
    for (auto& x : inputs) x = normal(rng);
    const std::vector<double> upstream = {normal(rng), normal(rng)};
    auto loss = [&] {
      const auto out = tape.forward(inputs);
      return upstream[0] * out[0] + upstream[1] * out[1];
    };
    loss();
    tape.parameters().zero_grad();
    tape.backward(upstream);
    const auto dinput = tape.input_gradients();
    const auto dparam = tape.parameters().gradient;
    worst = std::max(worst, worst_difference(inputs, dinput, loss));
    worst = std::max(worst,
                     worst_difference(tape.parameters().value, dparam, loss));
    nodes += tape.size();
  }
  return make("tape gradients", worst < kGradientTolerance,
              std::to_string(count) + " tapes, " + std::to_string(nodes) +
                  " nodes, worst rel err " + fmt(worst));
}

CheckResult check_pnn_gradients(bool multi_label) {
  const auto set = scheduling_data(2, 11, multi_label);
  auto model = pnn::make_pnn(set, pairwise::Framing::kPairwise, 3,
                             {{16, 16}, "tanh"}, 7, labels_for(multi_label));
  const double worst = model_gradient_error(model, set);
  return make(multi_label ? "pnn gradients (multi-label)" : "pnn gradients",
              worst < kGradientTolerance, "worst rel err " + fmt(worst));
}

CheckResult check_pddt_gradients(bool multi_label) {
  const auto set = scheduling_data(2, 12, multi_label);
  auto model = pddt::make_pddt(set, pairwise::Framing::kPairwise, 3,
                               pddt::PddtConfig{2}, 9, labels_for(multi_label));
  dynamic_cast<pddt::PddtCore&>(model.core())
      .set_selection_gradient(pddt::SelectionGradient::kFrozen);
  const double worst = model_gradient_error(model, set);
  return make(multi_label ? "pddt gradients (multi-label)" : "pddt gradients",
              worst < kGradientTolerance, "worst rel err " + fmt(worst));
}

CheckResult check_transition_gradients() {
  const auto set = scheduling_data(1, 13, false);
  actionrep::TransitionConfig config;
  config.hidden = 8;
  config.embedding_dim = 3;
  actionrep::TransitionModel model(set.action_count, set.context_dim, config,
                                   3);
  const auto& obs = set.schedules[0].observations;
  auto loss = [&](bool accumulate) {
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < 6; ++t) {
      total += model.transition_loss(obs[t].context, obs[t].taken_actions,
                                     obs[t + 1].context, 1.0, accumulate);
    }
    return total;
  };
  std::vector<diffcore::ParameterBlock*> blocks = model.network().parameters();
  blocks.push_back(&model.embeddings());
  for (auto* b : blocks) b->zero_grad();
  loss(true);
  double worst = 0.0;
  for (auto* b : blocks) {
    const std::vector<double> analytic = b->gradient;
    worst = std::max(worst, worst_difference(b->value, analytic,
                                             [&] { return loss(false); }));
  }
  return make("transition gradients", worst < kGradientTolerance,
              "worst rel err " + fmt(worst));
}

CheckResult check_marginal_normalization(bool multi_label) {
  const auto set = scheduling_data(5, 14, multi_label);
  Rng rng(15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> factor(0.05, 1.0);
  double worst_sum = 0.0;
  std::size_t argmax_changes = 0;
  std::size_t observations = 0;
  for (const auto& s : set.schedules) {
    for (const auto& obs : s.observations) {
      const std::size_t n = obs.action_count();
      std::vector<double> f(n * n);
      for (auto& v : f) v = unit(rng);
      auto score = [&](int a, int b) { return f[a * n + b]; };
      const auto base = pairwise::marginalize(obs, score);
      double sum = 0.0;
      for (double p : base.probabilities) sum += p;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      const double c = factor(rng);
      const auto scaled =
          pairwise::marginalize(obs, [&](int a, int b) { return c * score(a, b); });
      if (scaled.action != base.action) ++argmax_changes;
      ++observations;
    }
  }
  const bool ok = worst_sum <= 1e-9 && argmax_changes == 0;
  return make(multi_label ? "marginal normalization (multi-label)"
                          : "marginal normalization",
              ok,
              std::to_string(observations) + " observations, worst |sum-1| " +
                  fmt(worst_sum) + ", argmax changes under scaling " +
                  std::to_string(argmax_changes));
}

CheckResult check_pairwise_construction(bool multi_label) {
  const auto set = scheduling_data(5, 16, multi_label);
  const std::vector<double> embedding = {0.3, -0.2, 0.1};
  std::size_t bad_count = 0;
  std::size_t bad_pairs = 0;
  std::size_t examples = 0;
  for (const auto& s : set.schedules) {
    for (const auto& obs : s.observations) {
      if (obs.available_actions().size() < 2) continue;
      const auto ex =
          pairwise::build_pairwise(obs, embedding, s.demonstrator_id,
                                   labels_for(multi_label));
      const std::size_t avail = obs.available_actions().size();
      const std::size_t taken = obs.taken_actions.size();
      if (ex.size() != 2 * taken * (avail - taken)) ++bad_count;
      const std::size_t prefix = embedding.size() + obs.context.size();
      for (std::size_t k = 0; k + 1 < ex.size(); k += 2) {
        const auto& pos = ex[k];
        const auto& neg = ex[k + 1];
        bool ok = pos.label == 1 && neg.label == 0 &&
                  pos.meta.first == neg.meta.second &&
                  pos.meta.second == neg.meta.first &&
                  pos.features.size() == neg.features.size();
        for (std::size_t i = 0; ok && i < pos.features.size(); ++i) {
          ok = i < prefix ? pos.features[i] == neg.features[i]
                          : pos.features[i] == -neg.features[i];
        }
        if (!ok) ++bad_pairs;
      }
      examples += ex.size();
    }
  }
  return make(multi_label ? "pairwise construction (multi-label)"
                          : "pairwise construction",
              bad_count == 0 && bad_pairs == 0,
              std::to_string(examples) + " examples, " +
                  std::to_string(bad_count) + " wrong counts, " +
                  std::to_string(bad_pairs) + " asymmetric pairs");
}

CheckResult check_path_probabilities() {
  Rng rng(17);
  std::normal_distribution<double> normal(0.0, 2.0);
  double worst = 0.0;
  bool negative = false;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    pddt::PddtCore core(6, 3, 4, seed);
    for (const std::optional<double> alpha :
         {std::optional<double>{}, std::optional<double>{0.01},
          std::optional<double>{1e3}}) {
      core.set_alpha_override(alpha);
      for (int i = 0; i < 200; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = normal(rng);
        double sum = 0.0;
        for (double p : core.path_probabilities(x)) {
          negative = negative || p < 0.0;
          sum += p;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
  }
  return make("path probabilities", worst <= 1e-9 && !negative,
              "worst |sum-1| " + fmt(worst));
}

CheckResult check_crisp_agreement(std::size_t inputs) {
  const std::size_t width = 5;
  pddt::PddtCore core(width, 3, 4, 21);
  pnn::InputScaler scaler;
  scaler.offset = {0.5, -1.0, 0.0, 2.0, 0.25};
  scaler.scale = {2.0, 0.5, 1.0, 3.0, 1.5};
  core.set_scaler(scaler);
  const std::vector<std::string> names = {"a", "b", "c", "d", "e"};
  const auto tree = pddt::crispify(core, names, 0);
  auto saturated = core;
  saturated.set_alpha_override(1e6);
  Rng rng(22);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> x(width), logits(3), ws(saturated.workspace_size());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < inputs; ++i) {
    for (auto& v : x) v = normal(rng);
    saturated.forward(x, logits, ws);
    if (pairwise::argmax(logits) == tree.predict(x)) ++agree;
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(inputs);
  return make("crisp agreement", rate >= 0.99,
              std::to_string(agree) + "/" + std::to_string(inputs) + " agree");
}

CheckResult check_expert_oracle(std::size_t rollouts) {
  const envs::ScenarioConfig config;
  const envs::BetaSampler sampler;
  std::size_t matched = 0;
  std::size_t violations = 0;
  std::size_t attempts = 0;
  std::size_t completed = 0;
  while (completed < rollouts) {
    Rng rng(derive_seed(31, attempts++));
    const auto scenario = envs::SchedulingScenario::random(config, rng);
    const auto profile = sampler.sample(rng);
    envs::Rollout rollout;
    try {
      rollout = envs::rollout_expert(scenario, profile);
    } catch (const envs::DeadlockError&) {
      continue;
    }
    ++completed;
    violations += envs::verify_rollout(rollout, config).size();
    envs::SchedulingScenario replay(config, rollout.tasks,
                                    rollout.initial_agents);
    bool all_match = rollout.trace.size() == config.task_count;
    for (const auto& d : rollout.trace) {
      while (replay.current_time() < d.decision_time && replay.advance()) {
      }
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_agent = 0;
      std::size_t best_task = 0;
      for (std::size_t a = 0; a < config.agent_count; ++a) {
        for (std::size_t t = 0; t < config.task_count; ++t) {
          if (replay.check(a, t) != envs::Infeasibility::kNone) continue;
          const double p = oracle_priority(replay, a, t, profile);
          if (p > best) {
            best = p;
            best_agent = a;
            best_task = t;
          }
        }
      }
      if (best_agent != d.agent || best_task != d.task) all_match = false;
      replay.assign(d.agent, d.task);
    }
    if (all_match) ++matched;
  }
  return make("expert oracle", matched == rollouts && violations == 0,
              std::to_string(matched) + "/" + std::to_string(rollouts) +
                  " rollouts match, " + std::to_string(violations) +
                  " constraint violations");
}

CheckResult check_frozen_adaptation(bool multi_label) {
  DemonstrationSet set;
  if (multi_label) {
    set = scheduling_data(6, 18, true);
  } else {
    envs::LowDimConfig c;
    c.schedule_count = 12;
    c.seed = 18;
    set = envs::generate_lowdim(c);
  }
  const auto [train, test] = dataset::split(set, 0.5, 19);
  pnn::TrainOptions options;
  options.sgd.epochs = 2;
  std::vector<pnn::PersonalizedModel> models;
  models.push_back(pnn::make_pnn(train, pairwise::Framing::kPairwise, 2,
                                 {{8}, "tanh"}, 3, labels_for(multi_label)));
  models.push_back(pddt::make_pddt(train, pairwise::Framing::kPairwise, 2,
                                   pddt::PddtConfig{2}, 3,
                                   labels_for(multi_label)));
  std::size_t changed = 0;
  for (auto& model : models) {
    pnn::train(model, train, options);
    const auto before = model.parameter_checksum();
    pnn::PersonalizedPolicy policy(model, pnn::AdaptConfig{});
    pnn::evaluate_online(policy, test);
    if (model.parameter_checksum() != before) ++changed;
  }
  return make(multi_label ? "frozen weights during adaptation (multi-label)"
                          : "frozen weights during adaptation",
              changed == 0,
              std::to_string(changed) + " of " + std::to_string(models.size()) +
                  " models changed");
}

CheckResult check_dataset_roundtrip(bool multi_label) {
  std::vector<DemonstrationSet> sets;
  if (multi_label) {
    sets.push_back(scheduling_data(5, 20, true));
  } else {
    envs::LowDimConfig c;
    c.schedule_count = 50;
    sets.push_back(envs::generate_lowdim(c));
    sets.push_back(scheduling_data(5, 20, false));
    DemonstrationSet empty;
    empty.action_count = 2;
    empty.context_dim = 1;
    empty.action_dim = 1;
    sets.push_back(empty);
  }
  std::size_t mismatches = 0;
  for (const auto& set : sets) {
    std::stringstream buffer;
    dataset::write(set, buffer);
    const auto back = dataset::read(buffer);
    if (!(back == set) || dataset::fingerprint(back) != dataset::fingerprint(set)) {
      ++mismatches;
    }
  }
  return make(multi_label ? "dataset round-trip (multi-label)"
                          : "dataset round-trip",
              mismatches == 0,
              std::to_string(sets.size() - mismatches) + "/" +
                  std::to_string(sets.size()) + " sets identical");
}

std::vector<CheckResult> core_suite() {
  return {check_random_tapes(1000, 1),
          check_pnn_gradients(false),
          check_pddt_gradients(false),
          check_transition_gradients(),
          check_marginal_normalization(false),
          check_pairwise_construction(false),
          check_path_probabilities(),
          check_crisp_agreement(10000),
          check_expert_oracle(100),
          check_frozen_adaptation(false),
          check_dataset_roundtrip(false)};
}

std::vector<CheckResult> multi_label_suite() {
  return {check_pnn_gradients(true),
          check_pddt_gradients(true),
          check_marginal_normalization(true),
          check_pairwise_construction(true),
          check_frozen_adaptation(true),
          check_dataset_roundtrip(true)};
}

}  // namespace apprentice::checks
