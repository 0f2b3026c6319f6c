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

#include "apprentice/actionrep/actionrep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "apprentice/diffcore/rng.hpp"

namespace apprentice::actionrep {

namespace {

struct Transition {
  const dataset::Observation* from;
  const dataset::Observation* to;
};

std::vector<Transition> transitions(const dataset::DemonstrationSet& data,
                                    std::size_t* skipped) {
  std::vector<Transition> out;
  for (const auto& s : data.schedules) {
    if (s.observations.size() < 2) {
      if (skipped) ++*skipped;
      continue;
    }
    for (std::size_t t = 0; t + 1 < s.observations.size(); ++t) {
      out.push_back({&s.observations[t], &s.observations[t + 1]});
    }
  }
  return out;
}

}  // namespace

TransitionModel::TransitionModel(std::size_t action_count,
                                 std::size_t context_dim,
                                 const TransitionConfig& config,
                                 std::uint64_t seed)
    : action_count_(action_count),
      context_dim_(context_dim),
      dim_(config.embedding_dim),
      net_({config.embedding_dim + context_dim, config.hidden, context_dim},
           pnn::activation_from_string(config.activation), seed),
      table_(action_count * config.embedding_dim,
             diffcore::ParameterGroup::kEmbedding) {
  if (action_count == 0 || context_dim == 0 || config.embedding_dim == 0) {
    throw std::invalid_argument("transition model: zero-sized dimension");
  }
  Rng rng(derive_seed(seed, 0xac7));
  std::normal_distribution<double> gauss(0.0, config.embedding_init_std);
  for (double& v : table_.value) v = gauss(rng);
}

std::vector<double> TransitionModel::action_features(int a) const {
  if (a < 0 || static_cast<std::size_t>(a) >= action_count_) {
    throw std::out_of_range("unknown action id " + std::to_string(a));
  }
  const auto* p = table_.value.data() + static_cast<std::size_t>(a) * dim_;
  return {p, p + dim_};
}

void TransitionModel::fill_input(std::span<const double> context,
                                 std::span<const int> actions,
                                 std::span<double> input) const {
  if (context.size() != context_dim_) {
    throw std::invalid_argument("transition model: context width mismatch");
  }
  if (actions.empty()) {
    throw std::invalid_argument("transition model: no action taken");
  }
  std::fill(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(dim_),
            0.0);
  const double w = 1.0 / static_cast<double>(actions.size());
  for (int a : actions) {
    const auto e = action_features(a);
    for (std::size_t k = 0; k < dim_; ++k) input[k] += w * e[k];
  }
  std::copy(context.begin(), context.end(),
            input.begin() + static_cast<std::ptrdiff_t>(dim_));
}

std::vector<double> TransitionModel::predict(std::span<const double> context,
                                             std::span<const int> actions) const {
  std::vector<double> input(dim_ + context_dim_);
  std::vector<double> ws(net_.workspace_size());
  std::vector<double> out(context_dim_);
  fill_input(context, actions, input);
  net_.forward(input, out, ws);
  return out;
}

double TransitionModel::transition_loss(std::span<const double> context,
                                        std::span<const int> actions,
                                        std::span<const double> next,
                                        double scale, bool accumulate) {
  std::vector<double> input(dim_ + context_dim_);
  std::vector<double> ws(net_.workspace_size());
  std::vector<double> out(context_dim_);
  fill_input(context, actions, input);
  net_.forward(input, out, ws);
  double loss = 0.0;
  std::vector<double> dout(context_dim_);
  const double n = static_cast<double>(context_dim_);
  for (std::size_t k = 0; k < context_dim_; ++k) {
    const double r = out[k] - next[k];
    loss += r * r / n;
    dout[k] = 2.0 * r / n * scale;
  }
  if (accumulate) {
    std::vector<double> dinput(input.size());
    net_.backward(input, ws, dout, dinput);
    const double w = 1.0 / static_cast<double>(actions.size());
    for (int a : actions) {
      double* g = table_.gradient.data() + static_cast<std::size_t>(a) * dim_;
      for (std::size_t k = 0; k < dim_; ++k) g[k] += w * dinput[k];
    }
  }
  return loss;
}

double TransitionModel::evaluate(const dataset::DemonstrationSet& data) const {
  const auto pairs = transitions(data, nullptr);
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : pairs) {
    const auto pred = predict(t.from->context, t.from->taken_actions);
    for (std::size_t k = 0; k < context_dim_; ++k) {
      const double r = pred[k] - t.to->context[k];
      total += r * r;
    }
  }
  return total / static_cast<double>(pairs.size() * context_dim_);
}

nlohmann::json TransitionModel::to_json() const {
  return {{"format", "apprentice-transition v1"},
          {"action_count", action_count_},
          {"context_dim", context_dim_},
          {"embedding_dim", dim_},
          {"network", net_.to_json()},
          {"embeddings", table_.value}};
}

TransitionModel TransitionModel::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-transition v1") {
    throw std::invalid_argument("transition checkpoint: unsupported format");
  }
  auto net = pnn::Mlp::from_json(j.at("network"));
  TransitionConfig config;
  config.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  config.hidden = net->layer_sizes().at(1);
  config.activation = pnn::to_string(net->activation());
  TransitionModel m(j.at("action_count").get<std::size_t>(),
                    j.at("context_dim").get<std::size_t>(), config, 0);
  m.net_ = *net;
  auto values = j.at("embeddings").get<std::vector<double>>();
  if (values.size() != m.table_.size()) {
    throw std::invalid_argument("transition checkpoint: embedding count mismatch");
  }
  m.table_.value = std::move(values);
  return m;
}

TransitionModel train_transition(const dataset::DemonstrationSet& data,
                                 const TransitionConfig& config,
                                 TransitionReport* report) {
  config.sgd.validate();
  TransitionReport local;
  TransitionReport& rep = report ? *report : local;
  rep = {};
  const auto pairs = transitions(data, &rep.skipped_schedules);
  rep.transitions = pairs.size();
  TransitionModel model(data.action_count, data.context_dim, config,
                        config.sgd.seed);
  if (pairs.empty()) return model;

  // Standardize the context columns the network sees.
  pnn::InputScaler scaler;
  scaler.offset.assign(config.embedding_dim + data.context_dim, 0.0);
  scaler.scale.assign(config.embedding_dim + data.context_dim, 1.0);
  for (std::size_t c = 0; c < data.context_dim; ++c) {
    double mean = 0.0, sq = 0.0;
    for (const auto& t : pairs) mean += t.from->context[c];
    mean /= static_cast<double>(pairs.size());
    for (const auto& t : pairs) {
      sq += (t.from->context[c] - mean) * (t.from->context[c] - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(pairs.size()));
    scaler.offset[config.embedding_dim + c] = mean;
    scaler.scale[config.embedding_dim + c] = sd > 1e-9 ? sd : 1.0;
  }
  model.network().set_scaler(scaler);

  diffcore::Sgd sgd(config.sgd);
  Rng rng(derive_seed(config.sgd.seed, 0x7a5));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t epoch = 0; epoch < config.sgd.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.sgd.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.sgd.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      touched.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& t = pairs[order[i]];
        epoch_loss += model.transition_loss(t.from->context,
                                            t.from->taken_actions,
                                            t.to->context, scale, true);
        for (int a : t.from->taken_actions) {
          touched.push_back(static_cast<std::size_t>(a));
        }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      sgd.step(*model.network().parameters().front());
      sgd.step_rows(model.embeddings(), config.embedding_dim, touched);
    }
    rep.epoch_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return model;
}

dataset::DemonstrationSet with_learned_features(
    const dataset::DemonstrationSet& data, const TransitionModel& model) {
  if (model.action_count() != data.action_count) {
    throw std::invalid_argument("learned features: action count mismatch");
  }
  dataset::DemonstrationSet out = data;
  out.action_dim = model.embedding_dim();
  out.action_names.clear();
  for (std::size_t k = 0; k < out.action_dim; ++k) {
    out.action_names.push_back("omega" + std::to_string(k));
  }
  std::vector<std::vector<double>> features(data.action_count);
  for (std::size_t a = 0; a < data.action_count; ++a) {
    features[a] = model.action_features(static_cast<int>(a));
  }
  for (auto& s : out.schedules) {
    for (auto& o : s.observations) o.action_features = features;
  }
  return out;
}

}  // namespace apprentice::actionrep
