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

#include "apprentice/pnn/personalized_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "apprentice/pnn/mlp.hpp"

namespace apprentice::pnn {

using dataset::Observation;
using pairwise::Framing;
using pairwise::HeadKind;

// ---------------------------------------------------------------- ModelSpec

ModelSpec ModelSpec::for_dataset(const dataset::DemonstrationSet& set,
                                 Framing framing, std::size_t embedding_dim,
                                 pairwise::LabelMode labels) {
  if (set.action_count == 0) {
    throw std::invalid_argument("model spec: dataset has no actions");
  }
  ModelSpec spec;
  spec.framing = framing;
  spec.labels = labels;
  spec.embedding_dim = embedding_dim;
  spec.action_count = set.action_count;
  spec.context_dim = set.context_dim;
  spec.action_dim = set.action_dim;
  for (std::size_t i = 0; i < embedding_dim; ++i) {
    spec.feature_names.push_back("emb" + std::to_string(i));
  }
  for (std::size_t i = 0; i < set.context_dim; ++i) {
    spec.feature_names.push_back(i < set.context_names.size()
                                     ? set.context_names[i]
                                     : "ctx" + std::to_string(i));
  }
  auto action_name = [&](std::size_t k) {
    return k < set.action_names.size() ? set.action_names[k]
                                       : "act" + std::to_string(k);
  };
  switch (framing) {
    case Framing::kPairwise:
      for (std::size_t k = 0; k < set.action_dim; ++k) {
        spec.feature_names.push_back("delta_" + action_name(k));
      }
      break;
    case Framing::kPointwise:
      for (std::size_t k = 0; k < set.action_dim; ++k) {
        spec.feature_names.push_back(action_name(k));
      }
      break;
    case Framing::kStandard:
      for (std::size_t a = 0; a < set.action_count; ++a) {
        for (std::size_t k = 0; k < set.action_dim; ++k) {
          spec.feature_names.push_back("a" + std::to_string(a) + "_" +
                                       action_name(k));
        }
      }
      break;
  }
  return spec;
}

std::size_t ModelSpec::row_width() const {
  return framing == Framing::kStandard ? context_dim + action_count * action_dim
                                       : context_dim + action_dim;
}

std::size_t ModelSpec::output_width() const {
  return framing == Framing::kStandard ? action_count : 2;
}

pairwise::FramingSpec ModelSpec::framing_spec() const {
  pairwise::FramingSpec f;
  f.framing = framing;
  f.labels = labels;
  f.standard_head = head;
  return f;
}

nlohmann::json ModelSpec::to_json() const {
  return {{"framing", pairwise::to_string(framing)},
          {"labels", labels == pairwise::LabelMode::kMulti ? "multi" : "single"},
          {"head", head == HeadKind::kBinaryHeads ? "binary" : "softmax"},
          {"embedding_dim", embedding_dim},
          {"action_count", action_count},
          {"context_dim", context_dim},
          {"action_dim", action_dim},
          {"renyi_alpha", renyi_alpha},
          {"include_self_terms", marginal.include_self_terms},
          {"feature_names", feature_names}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.framing = pairwise::framing_from_string(j.at("framing").get<std::string>());
  s.labels = j.at("labels").get<std::string>() == "multi"
                 ? pairwise::LabelMode::kMulti
                 : pairwise::LabelMode::kSingle;
  s.head = j.at("head").get<std::string>() == "binary" ? HeadKind::kBinaryHeads
                                                       : HeadKind::kSoftmax;
  s.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  s.action_count = j.at("action_count").get<std::size_t>();
  s.context_dim = j.at("context_dim").get<std::size_t>();
  s.action_dim = j.at("action_dim").get<std::size_t>();
  s.renyi_alpha = j.at("renyi_alpha").get<double>();
  s.marginal.include_self_terms = j.at("include_self_terms").get<bool>();
  s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return s;
}

// ----------------------------------------------------------- EmbeddingTable

EmbeddingTable::EmbeddingTable(std::size_t dim)
    : dim_(dim), block_(0, diffcore::ParameterGroup::kEmbedding) {}

std::size_t EmbeddingTable::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::out_of_range("no embedding for '" + id + "'");
  }
  return it->second;
}

std::size_t EmbeddingTable::insert(const std::string& id,
                                   std::span<const double> values) {
  if (values.size() != dim_) {
    throw std::invalid_argument("embedding length mismatch");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("embedding values must be finite");
    }
  }
  auto it = index_.find(id);
  std::size_t i;
  if (it != index_.end()) {
    i = it->second;
  } else {
    i = ids_.size();
    ids_.push_back(id);
    index_.emplace(id, i);
    block_.resize(ids_.size() * dim_);
  }
  std::copy(values.begin(), values.end(), row(i).begin());
  return i;
}

std::size_t EmbeddingTable::ensure(const std::string& id, Rng& rng,
                                   double init_std) {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  std::normal_distribution<double> gauss(0.0, init_std);
  std::vector<double> v(dim_);
  for (double& x : v) x = init_std > 0.0 ? gauss(rng) : 0.0;
  return insert(id, v);
}

Embedding EmbeddingTable::get(const std::string& id) const {
  auto r = row(index_of(id));
  return {id, std::vector<double>(r.begin(), r.end())};
}

std::vector<double> EmbeddingTable::mean() const {
  std::vector<double> m(dim_, 0.0);
  if (ids_.empty()) return m;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    auto r = row(i);
    for (std::size_t k = 0; k < dim_; ++k) m[k] += r[k];
  }
  for (double& v : m) v /= static_cast<double>(ids_.size());
  return m;
}

nlohmann::json EmbeddingTable::to_json() const {
  return {{"dim", dim_}, {"ids", ids_}, {"values", block_.value}};
}

EmbeddingTable EmbeddingTable::from_json(const nlohmann::json& j) {
  EmbeddingTable t(j.at("dim").get<std::size_t>());
  const auto ids = j.at("ids").get<std::vector<std::string>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != ids.size() * t.dim_) {
    throw std::invalid_argument("embedding table: value count mismatch");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t.insert(ids[i], std::span<const double>(values).subspan(i * t.dim_, t.dim_));
  }
  return t;
}

// -------------------------------------------------------- PersonalizedModel

PersonalizedModel::PersonalizedModel(ModelSpec spec,
                                     std::unique_ptr<DifferentiableCore> core)
    : spec_(std::move(spec)),
      core_(std::move(core)),
      embeddings_(spec_.embedding_dim) {
  if (!core_) throw std::invalid_argument("model: null core");
  if (core_->input_width() != spec_.input_width()) {
    throw std::invalid_argument(
        "model: core input width " + std::to_string(core_->input_width()) +
        " != embedding + framing width " + std::to_string(spec_.input_width()));
  }
  if (core_->output_width() != spec_.output_width()) {
    throw std::invalid_argument("model: core output width mismatch");
  }
}

PersonalizedModel::PersonalizedModel(const PersonalizedModel& other)
    : spec_(other.spec_),
      core_(other.core_->clone()),
      embeddings_(other.embeddings_) {}

PersonalizedModel& PersonalizedModel::operator=(const PersonalizedModel& other) {
  if (this != &other) {
    spec_ = other.spec_;
    core_ = other.core_->clone();
    embeddings_ = other.embeddings_;
  }
  return *this;
}

namespace {

double positive_probability(std::span<const double> logits) {
  return diffcore::sigmoid(logits[1] - logits[0]);
}

}  // namespace

pairwise::ActionDistribution PersonalizedModel::predict(
    const Observation& obs, std::span<const double> embedding) const {
  if (embedding.size() != spec_.embedding_dim) {
    throw std::invalid_argument("predict: embedding length " +
                                std::to_string(embedding.size()) +
                                ", model expects " +
                                std::to_string(spec_.embedding_dim));
  }
  if (obs.context.size() != spec_.context_dim ||
      obs.action_count() != spec_.action_count ||
      (!obs.action_features.empty() &&
       obs.action_features.front().size() != spec_.action_dim)) {
    throw std::invalid_argument("predict: observation shape does not match model");
  }
  std::vector<double> input(spec_.input_width());
  std::vector<double> ws(core_->workspace_size());
  std::vector<double> logits(core_->output_width());

  switch (spec_.framing) {
    case Framing::kPairwise:
      return pairwise::marginalize(
          obs,
          [&](int a, int b) {
            pairwise::pairwise_features(obs, embedding, a, b, input);
            core_->forward(input, logits, ws);
            return positive_probability(logits);
          },
          spec_.marginal);
    case Framing::kPointwise: {
      pairwise::ActionDistribution out;
      out.probabilities.assign(spec_.action_count, 0.0);
      double total = 0.0;
      const auto avail = obs.available_actions();
      for (int a : avail) {
        auto it = std::copy(embedding.begin(), embedding.end(), input.begin());
        it = std::copy(obs.context.begin(), obs.context.end(), it);
        const auto& xa = obs.action_features[static_cast<std::size_t>(a)];
        std::copy(xa.begin(), xa.end(), it);
        core_->forward(input, logits, ws);
        const double p = positive_probability(logits);
        out.probabilities[static_cast<std::size_t>(a)] = p;
        total += p;
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
      out.action = pairwise::argmax(out.probabilities);
      return out;
    }
    case Framing::kStandard: {
      const auto ex = pairwise::build_standard(obs, embedding);
      core_->forward(ex.features, logits, ws);
      pairwise::ActionDistribution out;
      out.probabilities.assign(spec_.action_count, 0.0);
      if (spec_.head == HeadKind::kSoftmax) {
        diffcore::softmax(logits, out.probabilities, ex.mask);
      } else {
        double total = 0.0;
        for (std::size_t a = 0; a < spec_.action_count; ++a) {
          if (!ex.mask[a]) continue;
          out.probabilities[a] = diffcore::sigmoid(logits[a]);
          total += out.probabilities[a];
        }
        for (double& p : out.probabilities) p /= total;
      }
      out.action = pairwise::argmax(out.probabilities);
      return out;
    }
  }
  throw std::logic_error("predict: unknown framing");
}

std::uint64_t PersonalizedModel::parameter_checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* b : core_->parameters()) h = diffcore::checksum(b->value, h);
  return h;
}

nlohmann::json PersonalizedModel::to_json() const {
  return {{"format", "apprentice-model v1"},
          {"spec", spec_.to_json()},
          {"core", core_->to_json()},
          {"embeddings", embeddings_.to_json()}};
}

// ------------------------------------------------------------------- losses

double row_loss(const ModelSpec& spec, std::span<const double> logits,
                std::span<const double> target,
                std::span<const unsigned char> mask, diffcore::LossStats* stats,
                std::span<double> dlogits, double scale) {
  const std::size_t k = logits.size();
  thread_local std::vector<double> probs;
  thread_local std::vector<double> dprobs;
  probs.resize(k);
  dprobs.resize(k);
  const bool want_grad = !dlogits.empty();
  if (spec.head == HeadKind::kSoftmax || spec.framing != Framing::kStandard) {
    diffcore::softmax(logits, probs, mask);
    const double loss = diffcore::renyi_loss(
        probs, target, spec.renyi_alpha, stats,
        want_grad ? std::span<double>(dprobs) : std::span<double>{});
    if (want_grad) {
      diffcore::softmax_backward(probs, dprobs, dlogits, mask);
      for (double& g : dlogits) g *= scale;
    }
    return loss;
  }
  double loss = 0.0;
  for (std::size_t h = 0; h < k; ++h) {
    if (!mask.empty() && !mask[h]) {
      if (want_grad) dlogits[h] = 0.0;
      continue;
    }
    const double p = diffcore::sigmoid(logits[h]);
    const double pr[1] = {p};
    const double tg[1] = {target[h]};
    double g[1] = {0.0};
    loss += diffcore::binary_heads_renyi_loss(
        pr, tg, spec.renyi_alpha, stats,
        want_grad ? std::span<double>(g) : std::span<double>{});
    if (want_grad) dlogits[h] = g[0] * p * (1.0 - p) * scale;
  }
  return loss;
}

namespace {

double rows_embedding_loss(const PersonalizedModel& model,
                           const pairwise::RowSet& rows,
                           std::span<const std::size_t> indices,
                           std::span<const double> embedding,
                           std::span<double> grad, diffcore::LossStats* stats) {
  const auto& spec = model.spec();
  const auto& core = model.core();
  const std::size_t d = spec.embedding_dim;
  std::vector<double> input(spec.input_width());
  std::vector<double> ws(core.workspace_size());
  std::vector<double> logits(core.output_width());
  std::vector<double> dlogits(core.output_width());
  std::vector<double> dinput(grad.empty() ? 0 : spec.input_width());
  std::fill(grad.begin(), grad.end(), 0.0);
  std::copy(embedding.begin(), embedding.end(), input.begin());
  double wsum = 0.0;
  for (auto i : indices) wsum += rows.weight[i];
  if (wsum <= 0.0) return 0.0;
  double total = 0.0;
  for (auto i : indices) {
    const auto r = rows.row(i);
    std::copy(r.begin(), r.end(), input.begin() + static_cast<std::ptrdiff_t>(d));
    core.forward(input, logits, ws);
    const double w = rows.weight[i] / wsum;
    total += w * row_loss(spec, logits, rows.target(i), rows.mask(i), stats,
                          grad.empty() ? std::span<double>{}
                                       : std::span<double>(dlogits),
                          w);
    if (!grad.empty()) {
      core.input_gradient(input, ws, dlogits, dinput);
      for (std::size_t k = 0; k < d; ++k) grad[k] += dinput[k];
    }
  }
  return total;
}

}  // namespace

RowObjective::RowObjective(PersonalizedModel& model,
                           const pairwise::RowSet& rows)
    : model_(model), rows_(rows) {
  if (rows.width != model.spec().row_width()) {
    throw std::invalid_argument("objective: row width does not match model");
  }
}

std::vector<std::size_t> RowObjective::all_rows() const {
  std::vector<std::size_t> idx(rows_.rows());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

double RowObjective::evaluate(std::span<const std::size_t> indices,
                              bool accumulate, diffcore::LossStats* stats) {
  const auto& spec = model_.spec();
  auto& core = model_.core();
  auto& table = model_.embeddings();
  const std::size_t d = spec.embedding_dim;
  std::vector<double> input(spec.input_width());
  std::vector<double> ws(core.workspace_size());
  std::vector<double> logits(core.output_width());
  std::vector<double> dlogits(core.output_width());
  std::vector<double> dinput(d > 0 ? spec.input_width() : 0);
  double wsum = 0.0;
  for (auto i : indices) wsum += rows_.weight[i];
  if (wsum <= 0.0) return 0.0;
  double total = 0.0;
  for (auto i : indices) {
    const std::uint32_t owner = rows_.owner[i];
    if (d > 0) {
      auto e = table.row(owner);
      std::copy(e.begin(), e.end(), input.begin());
    }
    const auto r = rows_.row(i);
    std::copy(r.begin(), r.end(), input.begin() + static_cast<std::ptrdiff_t>(d));
    core.forward(input, logits, ws);
    const double w = rows_.weight[i] / wsum;
    total += w * row_loss(spec, logits, rows_.target(i), rows_.mask(i), stats,
                          accumulate ? std::span<double>(dlogits)
                                     : std::span<double>{},
                          w);
    if (accumulate) {
      core.backward(input, ws, dlogits, dinput);
      if (d > 0) {
        double* g = table.block().gradient.data() + owner * d;
        for (std::size_t k = 0; k < d; ++k) g[k] += dinput[k];
      }
    }
  }
  return total;
}

double RowObjective::evaluate_with_embedding(
    std::span<const std::size_t> indices, std::span<const double> embedding,
    std::span<double> grad, diffcore::LossStats* stats) const {
  return rows_embedding_loss(model_, rows_, indices, embedding, grad, stats);
}

InputScaler fit_scaler(const pairwise::RowSet& rows, std::size_t embedding_dim) {
  const std::size_t w = rows.width;
  InputScaler s;
  s.offset.assign(embedding_dim + w, 0.0);
  s.scale.assign(embedding_dim + w, 1.0);
  const std::size_t n = rows.rows();
  if (n == 0) return s;
  for (std::size_t c = 0; c < w; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += rows.features[i * w + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = rows.features[i * w + c] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    s.offset[embedding_dim + c] = mean;
    s.scale[embedding_dim + c] = sd > 1e-9 ? sd : 1.0;
  }
  return s;
}

// ------------------------------------------------------------------ training

TrainReport train(PersonalizedModel& model,
                  const dataset::DemonstrationSet& data,
                  const TrainOptions& options) {
  options.sgd.validate();
  const auto& spec = model.spec();
  if (data.action_count != spec.action_count ||
      data.context_dim != spec.context_dim ||
      data.action_dim != spec.action_dim) {
    throw std::invalid_argument("train: dataset shape does not match model");
  }
  const std::size_t d = spec.embedding_dim;
  auto& table = model.embeddings();
  Rng init_rng(derive_seed(options.sgd.seed, 0xe3b));
  std::vector<std::uint32_t> owners;
  owners.reserve(data.schedules.size());
  for (const auto& s : data.schedules) {
    owners.push_back(static_cast<std::uint32_t>(
        table.ensure(s.demonstrator_id, init_rng, options.embedding_init_std)));
  }
  const pairwise::RowSet rows =
      pairwise::build_rows(data, spec.framing_spec(), owners,
                           options.schedule_weights);
  TrainReport report;
  report.rows = rows.rows();
  if (rows.rows() == 0) {
    throw TrainingError("train: no training rows");
  }
  if (options.fit_scaler) model.core().set_scaler(fit_scaler(rows, d));

  RowObjective objective(model, rows);
  diffcore::Sgd sgd(options.sgd);
  diffcore::LossStats stats;
  Rng order_rng(derive_seed(options.sgd.seed, 0x5f1));
  std::vector<std::size_t> order = objective.all_rows();
  std::vector<std::size_t> touched;
  std::vector<unsigned char> seen(table.size(), 0);
  model.core().zero_grad();
  table.block().zero_grad();

  const std::size_t bs = options.sgd.batch_size;
  for (std::size_t epoch = 0; epoch < options.sgd.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      const double loss = objective.evaluate(batch, true, &stats);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << ", batch starting "
           << start << " (clamp events so far: " << stats.clamp_events << ")";
        throw TrainingError(os.str());
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      for (auto* block : model.core().parameters()) sgd.step(*block);
      if (d > 0) {
        touched.clear();
        for (auto i : batch) {
          const auto o = rows.owner[i];
          if (!seen[o]) {
            seen[o] = 1;
            touched.push_back(o);
          }
        }
        for (auto o : touched) seen[o] = 0;
        if (options.freeze_embeddings) {
          table.block().zero_grad();
        } else {
          sgd.step_rows(table.block(), d, touched);
        }
      }
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  report.clamp_events = stats.clamp_events;
  report.rejected_updates = sgd.rejected_updates();
  return report;
}

// --------------------------------------------------------------- adaptation

double observation_embedding_gradient(const PersonalizedModel& model,
                                      const Observation& obs,
                                      std::span<const double> embedding,
                                      std::span<double> grad) {
  pairwise::RowSet rows = pairwise::empty_rows(
      dataset::DemonstrationSet{{}, model.spec().action_count,
                                model.spec().context_dim,
                                model.spec().action_dim},
      model.spec().framing_spec());
  pairwise::append_rows(rows, obs, model.spec().framing_spec(), 0);
  std::vector<std::size_t> idx(rows.rows());
  std::iota(idx.begin(), idx.end(), 0);
  return rows_embedding_loss(model, rows, idx, embedding, grad, nullptr);
}

EmbeddingAdapter::EmbeddingAdapter(const PersonalizedModel& model,
                                   AdaptConfig config)
    : model_(model), config_(config) {
  if (!(config_.learning_rate > 0.0)) {
    throw std::invalid_argument("adapt: learning_rate must be > 0");
  }
  start_ = model_.embeddings().mean();
  reset();
}

void EmbeddingAdapter::reset() {
  embedding_ = start_;
  seen_ = pairwise::empty_rows(
      dataset::DemonstrationSet{{}, model_.spec().action_count,
                                model_.spec().context_dim,
                                model_.spec().action_dim},
      model_.spec().framing_spec());
}

void EmbeddingAdapter::record(const Observation& obs) {
  pairwise::append_rows(seen_, obs, model_.spec().framing_spec(), 0);
}

void EmbeddingAdapter::observe(const Observation& obs) {
  const std::size_t d = model_.spec().embedding_dim;
  if (d == 0) return;
  std::vector<double> grad(d);
  record(obs);
  std::vector<std::size_t> idx(seen_.rows());
  std::iota(idx.begin(), idx.end(), 0);
  if (config_.mode == AdaptMode::kOnline) {
    // Warm-started steps on every decision observed so far.
    for (std::size_t s = 0; s < config_.steps_per_observation; ++s) {
      rows_embedding_loss(model_, seen_, idx, embedding_, grad, nullptr);
      for (std::size_t k = 0; k < d; ++k) {
        embedding_[k] -= config_.learning_rate * grad[k];
      }
    }
    return;
  }
  // Batch: refit from the starting point on everything seen so far.
  embedding_ = start_;
  for (std::size_t pass = 0; pass < config_.batch_passes; ++pass) {
    rows_embedding_loss(model_, seen_, idx, embedding_, grad, nullptr);
    for (std::size_t k = 0; k < d; ++k) {
      embedding_[k] -= config_.learning_rate * grad[k];
    }
  }
}

Embedding adapt_embedding(const PersonalizedModel& model,
                          const dataset::Schedule& schedule,
                          const AdaptConfig& config) {
  EmbeddingAdapter adapter(model, config);
  if (config.mode == AdaptMode::kOnline) {
    for (const auto& obs : schedule.observations) adapter.observe(obs);
  } else if (!schedule.observations.empty()) {
    for (std::size_t i = 0; i + 1 < schedule.observations.size(); ++i) {
      adapter.record(schedule.observations[i]);
    }
    adapter.observe(schedule.observations.back());
  }
  Embedding out;
  out.owner = schedule.demonstrator_id;
  auto e = adapter.current();
  out.values.assign(e.begin(), e.end());
  return out;
}

// ---------------------------------------------------------------- policies

PersonalizedPolicy::PersonalizedPolicy(const PersonalizedModel& model,
                                       AdaptConfig config)
    : model_(model), adapter_(model, config) {}

void PersonalizedPolicy::begin(const dataset::Schedule&) { adapter_.reset(); }

pairwise::ActionDistribution PersonalizedPolicy::predict(const Observation& obs) {
  return model_.predict(obs, adapter_.current());
}

void PersonalizedPolicy::observe(const Observation& obs) {
  adapter_.observe(obs);
}

EvalResult evaluate_online(OnlinePolicy& policy,
                           const dataset::DemonstrationSet& test,
                           double renyi_alpha) {
  EvalResult result;
  double loss_sum = 0.0, head_sum = 0.0;
  std::vector<double> target, head_p, head_y;
  auto hit = [](const Observation& obs, int action) {
    return std::find(obs.taken_actions.begin(), obs.taken_actions.end(),
                     action) != obs.taken_actions.end();
  };
  for (const auto& schedule : test.schedules) {
    policy.begin(schedule);
    for (const auto& obs : schedule.observations) {
      result.prequential_correct += hit(obs, policy.predict(obs).action) ? 1 : 0;
      policy.observe(obs);
    }
    for (const auto& obs : schedule.observations) {
      const auto dist = policy.predict(obs);
      result.correct += hit(obs, dist.action) ? 1 : 0;
      ++result.total;
      if (dist.degenerate) ++result.degenerate_predictions;
      ++result.confusion[{obs.taken_actions.front(), dist.action}];
      target.assign(obs.action_count(), 0.0);
      for (int a : obs.taken_actions) {
        target[static_cast<std::size_t>(a)] =
            1.0 / static_cast<double>(obs.taken_actions.size());
      }
      loss_sum += diffcore::renyi_loss(dist.probabilities, target, renyi_alpha,
                                       &result.loss_stats);
      head_p.clear();
      head_y.clear();
      for (int a : obs.available_actions()) {
        head_p.push_back(dist.probabilities[static_cast<std::size_t>(a)]);
        head_y.push_back(hit(obs, a) ? 1.0 : 0.0);
      }
      head_sum += diffcore::binary_heads_renyi_loss(head_p, head_y, renyi_alpha);
    }
  }
  result.mean_loss =
      result.total ? loss_sum / static_cast<double>(result.total) : 0.0;
  result.mean_head_loss =
      result.total ? head_sum / static_cast<double>(result.total) : 0.0;
  return result;
}

PersonalizedModel make_pnn(const dataset::DemonstrationSet& set,
                           Framing framing, std::size_t embedding_dim,
                           const NetworkConfig& network, std::uint64_t seed,
                           pairwise::LabelMode labels) {
  ModelSpec spec = ModelSpec::for_dataset(set, framing, embedding_dim, labels);
  std::vector<std::size_t> sizes{spec.input_width()};
  sizes.insert(sizes.end(), network.hidden.begin(), network.hidden.end());
  sizes.push_back(spec.output_width());
  auto core = std::make_unique<Mlp>(
      sizes, activation_from_string(network.activation), seed);
  return PersonalizedModel(std::move(spec), std::move(core));
}

}  // namespace apprentice::pnn
