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
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/diffcore/loss.hpp"
#include "apprentice/diffcore/parameter.hpp"
#include "apprentice/diffcore/rng.hpp"
#include "apprentice/pairwise/framing.hpp"
#include "apprentice/pairwise/pairwise.hpp"
#include "apprentice/pnn/core.hpp"

namespace apprentice::pnn {

/// Everything about a model that is fixed by the data and the framing.
struct ModelSpec {
  pairwise::Framing framing = pairwise::Framing::kPairwise;
  pairwise::LabelMode labels = pairwise::LabelMode::kSingle;
  pairwise::HeadKind head = pairwise::HeadKind::kSoftmax;
  std::size_t embedding_dim = 0;
  std::size_t action_count = 0;
  std::size_t context_dim = 0;
  std::size_t action_dim = 0;
  double renyi_alpha = 1.0;
  pairwise::MarginalOptions marginal;
  /// Names of every input column, embedding first.
  std::vector<std::string> feature_names;

  static ModelSpec for_dataset(const dataset::DemonstrationSet& set,
                               pairwise::Framing framing,
                               std::size_t embedding_dim,
                               pairwise::LabelMode labels =
                                   pairwise::LabelMode::kSingle);

  std::size_t row_width() const;
  std::size_t input_width() const { return embedding_dim + row_width(); }
  std::size_t output_width() const;
  pairwise::FramingSpec framing_spec() const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// A learned vector attached to a demonstrator (or an action).
struct Embedding {
  std::string owner;
  std::vector<double> values;
};

/// Demonstrator -> embedding rows, stored in one embedding-group parameter
/// block so rows can be stepped sparsely.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const;

  /// Returns the row for `id`, creating it from N(0, init_std^2) if absent.
  std::size_t ensure(const std::string& id, Rng& rng, double init_std);
  std::size_t insert(const std::string& id, std::span<const double> values);

  std::span<const double> row(std::size_t i) const {
    return {block_.value.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) {
    return {block_.value.data() + i * dim_, dim_};
  }
  Embedding get(const std::string& id) const;
  /// Mean of all rows (zeros when empty).
  std::vector<double> mean() const;

  diffcore::ParameterBlock& block() { return block_; }
  const diffcore::ParameterBlock& block() const { return block_; }

  nlohmann::json to_json() const;
  static EmbeddingTable from_json(const nlohmann::json& j);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  diffcore::ParameterBlock block_;
};

/// A differentiable core whose input is [embedding | framed features]. With
/// embedding_dim == 0 it is an ordinary, non-personalized model.
class PersonalizedModel {
 public:
  PersonalizedModel(ModelSpec spec, std::unique_ptr<DifferentiableCore> core);
  PersonalizedModel(const PersonalizedModel& other);
  PersonalizedModel& operator=(const PersonalizedModel& other);
  PersonalizedModel(PersonalizedModel&&) noexcept = default;
  PersonalizedModel& operator=(PersonalizedModel&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  DifferentiableCore& core() { return *core_; }
  const DifferentiableCore& core() const { return *core_; }
  EmbeddingTable& embeddings() { return embeddings_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }

  /// Distribution over all actions for one observation; pairwise models are
  /// marginalized over counterfactual comparisons. Deterministic.
  pairwise::ActionDistribution predict(const dataset::Observation& obs,
                                       std::span<const double> embedding) const;

  /// Checksum over every non-embedding parameter.
  std::uint64_t parameter_checksum() const;

  nlohmann::json to_json() const;

 private:
  ModelSpec spec_;
  std::unique_ptr<DifferentiableCore> core_;
  EmbeddingTable embeddings_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loss of one framed row against its target. Writes dL/dlogits (scaled by
/// `scale`) into dlogits when non-empty.
double row_loss(const ModelSpec& spec, std::span<const double> logits,
                std::span<const double> target,
                std::span<const unsigned char> mask,
                diffcore::LossStats* stats, std::span<double> dlogits,
                double scale = 1.0);

/// Weighted mean loss over a subset of rows, optionally accumulating
/// gradients into the core parameters and embedding rows.
class RowObjective {
 public:
  RowObjective(PersonalizedModel& model, const pairwise::RowSet& rows);

  double evaluate(std::span<const std::size_t> indices, bool accumulate,
                  diffcore::LossStats* stats = nullptr);

  /// Loss over `indices` with every row paired to `embedding` instead of
  /// its owner's row; writes dL/dembedding into `grad` if non-empty. The
  /// model is not modified.
  double evaluate_with_embedding(std::span<const std::size_t> indices,
                                 std::span<const double> embedding,
                                 std::span<double> grad,
                                 diffcore::LossStats* stats = nullptr) const;

  std::vector<std::size_t> all_rows() const;

 private:
  PersonalizedModel& model_;
  const pairwise::RowSet& rows_;
};

struct TrainOptions {
  diffcore::SgdConfig sgd;
  double embedding_init_std = 0.1;
  bool freeze_embeddings = false;
  /// Optional per-schedule weights (soft cluster responsibilities).
  std::vector<double> schedule_weights;
  /// Fit the input standardizer on the training rows before the first epoch.
  bool fit_scaler = true;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::size_t clamp_events = 0;
  std::size_t rejected_updates = 0;
  std::size_t rows = 0;
};

/// Minibatch SGD over the framed rows of `data`. Every schedule's
/// demonstrator receives an embedding row if it lacks one.
TrainReport train(PersonalizedModel& model, const dataset::DemonstrationSet& data,
                  const TrainOptions& options);

/// Column standardizer for [embedding | rows]; embedding columns are left
/// unscaled.
InputScaler fit_scaler(const pairwise::RowSet& rows, std::size_t embedding_dim);

enum class AdaptMode { kOnline, kBatch };

struct AdaptConfig {
  double learning_rate = 0.1;
  /// Full-gradient steps taken on each newly observed decision (online), or
  /// per pass over the whole schedule (batch).
  std::size_t steps_per_observation = 5;
  std::size_t batch_passes = 20;
  AdaptMode mode = AdaptMode::kOnline;
};

/// Test-time embedding inference for one unseen demonstrator. Starts from the
/// mean training embedding; only the embedding is updated.
class EmbeddingAdapter {
 public:
  EmbeddingAdapter(const PersonalizedModel& model, AdaptConfig config);

  void reset();
  std::span<const double> current() const { return embedding_; }
  void observe(const dataset::Observation& obs);
  /// Batch mode: stores the observation's rows without refitting.
  void record(const dataset::Observation& obs);

 private:
  const PersonalizedModel& model_;
  AdaptConfig config_;
  std::vector<double> embedding_;
  std::vector<double> start_;
  pairwise::RowSet seen_;
};

/// Adapts an embedding for a new demonstrator on `schedule` in timestep order.
Embedding adapt_embedding(const PersonalizedModel& model,
                          const dataset::Schedule& schedule,
                          const AdaptConfig& config);

/// Gradient of the mean framed loss of one observation with respect to the
/// embedding. Returns the loss.
double observation_embedding_gradient(const PersonalizedModel& model,
                                      const dataset::Observation& obs,
                                      std::span<const double> embedding,
                                      std::span<double> grad);

/// Predict-then-observe interface used by every evaluated method.
class OnlinePolicy {
 public:
  virtual ~OnlinePolicy() = default;
  virtual void begin(const dataset::Schedule& schedule) = 0;
  virtual pairwise::ActionDistribution predict(
      const dataset::Observation& obs) = 0;
  virtual void observe(const dataset::Observation& obs) = 0;
};

/// Personalized model with online embedding adaptation.
class PersonalizedPolicy : public OnlinePolicy {
 public:
  PersonalizedPolicy(const PersonalizedModel& model, AdaptConfig config);
  void begin(const dataset::Schedule& schedule) override;
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override;
  void observe(const dataset::Observation& obs) override;
  std::span<const double> embedding() const { return adapter_.current(); }

 private:
  const PersonalizedModel& model_;
  EmbeddingAdapter adapter_;
};

struct EvalResult {
  /// Correct predictions made with the state reached after the policy has
  /// observed the whole schedule.
  std::size_t correct = 0;
  /// Correct predictions made before each decision was observed.
  std::size_t prequential_correct = 0;
  std::size_t total = 0;
  double mean_loss = 0.0;
  /// Per-timestep sum over available actions of the binary divergence between
  /// "taken" and the predicted action probability (the multi-label metric).
  double mean_head_loss = 0.0;
  std::size_t degenerate_predictions = 0;
  diffcore::LossStats loss_stats;
  /// (taken action, predicted action) -> count
  std::map<std::pair<int, int>, std::size_t> confusion;

  double accuracy() const {
    return total ? static_cast<double>(correct) / static_cast<double>(total)
                 : 0.0;
  }
  double prequential_accuracy() const {
    return total ? static_cast<double>(prequential_correct) /
                       static_cast<double>(total)
                 : 0.0;
  }
};

/// Top-1 next-action accuracy: a prediction counts as correct if it is one of
/// the taken actions. Each test schedule is first replayed through the policy
/// (predict, then observe) which yields the prequential accuracy; every
/// timestep is then scored again with the adapted state, which yields the
/// headline accuracy and the loss. The loss is the Renyi divergence between
/// the normalized taken-action indicator and the predicted distribution.
EvalResult evaluate_online(OnlinePolicy& policy,
                           const dataset::DemonstrationSet& test,
                           double renyi_alpha = 1.0);

struct NetworkConfig {
  std::vector<std::size_t> hidden = {32, 32};
  std::string activation = "tanh";
};

/// Builds an untrained PNN (or plain network when embedding_dim == 0).
PersonalizedModel make_pnn(const dataset::DemonstrationSet& set,
                           pairwise::Framing framing, std::size_t embedding_dim,
                           const NetworkConfig& network, std::uint64_t seed,
                           pairwise::LabelMode labels =
                               pairwise::LabelMode::kSingle);

}  // namespace apprentice::pnn
