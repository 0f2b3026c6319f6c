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
#include <string>
#include <vector>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/pairwise/framing.hpp"
#include "apprentice/pairwise/pairwise.hpp"
#include "apprentice/pnn/personalized_model.hpp"

namespace apprentice::baselines {

// ---------------------------------------------------------------------- CART

struct CartConfig {
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 2;
};

struct CartNode {
  /// -1 for a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;   ///< x[feature] <= threshold
  int right = -1;  ///< x[feature] > threshold
  std::vector<double> class_weight;
};

/// Greedy binary tree grown by weighted Gini reduction. Thresholds are
/// midpoints between consecutive distinct values; ties between candidate
/// splits go to the lowest feature index, then the lowest threshold.
class CartTree {
 public:
  std::size_t width() const { return width_; }
  std::size_t class_count() const { return classes_; }
  const std::vector<CartNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  std::size_t leaf(std::span<const double> x) const;
  /// Normalized class weights of the leaf reached by x.
  std::vector<double> distribution(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static CartTree from_json(const nlohmann::json& j);

  friend CartTree fit_cart(std::span<const double>, std::size_t,
                           std::span<const int>, std::span<const double>,
                           std::size_t, const CartConfig&);

 private:
  std::size_t width_ = 0;
  std::size_t classes_ = 0;
  std::vector<CartNode> nodes_;
};

/// Rows are `width` wide; `weights` may be empty (all 1). Throws
/// std::invalid_argument on empty input or out-of-range labels.
CartTree fit_cart(std::span<const double> features, std::size_t width,
                  std::span<const int> labels, std::span<const double> weights,
                  std::size_t class_count, const CartConfig& config = {});

/// A CART over [embedding | framed row] for any framing.
struct DtModel {
  pairwise::Framing framing = pairwise::Framing::kPairwise;
  std::size_t embedding_dim = 0;
  CartTree tree;

  pairwise::ActionDistribution predict(const dataset::Observation& obs,
                                       std::span<const double> embedding) const;

  nlohmann::json to_json() const;
  static DtModel from_json(const nlohmann::json& j);
};

/// Trains a DtModel. Row r is paired with embeddings[rows.owner[r]].
DtModel fit_dt(const pairwise::RowSet& rows, pairwise::Framing framing,
               const std::vector<std::vector<double>>& embeddings,
               const CartConfig& config);

/// Plain decision tree without any embedding.
DtModel fit_plain_dt(const dataset::DemonstrationSet& train,
                     pairwise::Framing framing, const CartConfig& config);

class DtPolicy : public pnn::OnlinePolicy {
 public:
  explicit DtPolicy(const DtModel& model) : model_(model) {}
  void begin(const dataset::Schedule&) override {}
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override {
    return model_.predict(obs, {});
  }
  void observe(const dataset::Observation&) override {}

 private:
  const DtModel& model_;
};

// --------------------------------------------------------------- clustering

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  /// Objective after every Lloyd iteration.
  std::vector<double> objective;
};

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing or max_iterations is reached.
KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

struct GmmResult {
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;
  std::vector<double> weights;
  /// responsibilities[i][c]
  std::vector<std::vector<double>> responsibilities;
  std::vector<double> log_likelihood;

  double log_density(std::span<const double> x, std::size_t c) const;
};

/// Diagonal-covariance mixture fitted by EM from a k-means start.
GmmResult fit_gmm(const std::vector<std::vector<double>>& points, std::size_t k,
                  std::uint64_t seed, std::size_t iterations = 100,
                  double variance_floor = 1e-6);

/// Mean feature vector of chosen actions followed by the normalized
/// histogram of chosen action ids.
std::vector<double> demonstrator_summary(
    const std::vector<const dataset::Schedule*>& schedules,
    std::size_t action_count, std::size_t action_dim);

enum class ClusterMethod { kKMeans, kGmm };
const char* to_string(ClusterMethod m);
ClusterMethod cluster_method_from_string(const std::string& name);

struct ClusterConfig {
  ClusterMethod method = ClusterMethod::kKMeans;
  std::size_t k = 2;
  pairwise::Framing framing = pairwise::Framing::kPairwise;
  pnn::NetworkConfig network;
  pnn::TrainOptions train;
  std::uint64_t seed = 1;
};

struct ClusteredModel {
  ClusterMethod method = ClusterMethod::kKMeans;
  std::vector<pnn::PersonalizedModel> members;
  /// Fraction of training demonstrators per cluster (routing prior).
  std::vector<double> prior;
  /// Demonstrator id -> cluster (hard assignment or argmax responsibility).
  std::vector<std::string> demonstrators;
  std::vector<std::size_t> assignment;
  std::size_t dropped_clusters = 0;

  nlohmann::json to_json() const;
  static ClusteredModel from_json(const nlohmann::json& j);
};

/// Clusters demonstrators by their summaries and trains one plain network
/// per cluster. Cluster c trains with seed + c; GMM members weight every
/// schedule by its responsibility. Empty clusters are dropped.
ClusteredModel fit_clustered(const dataset::DemonstrationSet& train,
                             const ClusterConfig& config);

/// Routes a test schedule to the cluster whose model best explains the
/// decisions observed so far, starting from the cluster-size prior.
class ClusteredPolicy : public pnn::OnlinePolicy {
 public:
  explicit ClusteredPolicy(const ClusteredModel& model);
  void begin(const dataset::Schedule&) override;
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override;
  void observe(const dataset::Observation& obs) override;
  std::size_t current_cluster() const;

 private:
  const ClusteredModel& model_;
  std::vector<double> score_;
};

// -------------------------------------------------------------------- EM-DT

struct EmDtConfig {
  std::size_t modes = 2;
  std::size_t iterations = 10;
  pairwise::Framing framing = pairwise::Framing::kPairwise;
  CartConfig cart;
  std::uint64_t seed = 1;
};

struct EmDtModel {
  DtModel dt;
  std::size_t modes = 2;
  /// mode_probability[s][m] for every training schedule.
  std::vector<std::vector<double>> mode_probability;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> train_accuracy;

  std::vector<double> mode_embedding(std::size_t mode) const;

  nlohmann::json to_json() const;
  static EmDtModel from_json(const nlohmann::json& j);
};

/// Alternates fitting a tree on inputs with a one-hot mode embedding sampled
/// per schedule and re-scoring each schedule's modes by tree accuracy. If the
/// assignments never settle, the best-scoring iteration is returned.
EmDtModel fit_em_dt(const dataset::DemonstrationSet& train,
                    const EmDtConfig& config);

/// Picks the mode with the best accuracy on the decisions observed so far
/// (ties to the lowest mode).
class EmDtPolicy : public pnn::OnlinePolicy {
 public:
  explicit EmDtPolicy(const EmDtModel& model) : model_(model) {}
  void begin(const dataset::Schedule&) override;
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override;
  void observe(const dataset::Observation& obs) override;

 private:
  const EmDtModel& model_;
  std::vector<std::size_t> hits_;
};

// ------------------------------------------------------------ DT-on-PNN

/// CART over inputs paired with the PNN's trained embeddings. The framing
/// defaults to the standard (multi-class) one.
DtModel fit_dt_on_pnn_embeddings(const pnn::PersonalizedModel& pnn,
                                 const dataset::DemonstrationSet& train,
                                 const CartConfig& config,
                                 pairwise::Framing framing =
                                     pairwise::Framing::kStandard);

/// Tree predictions using embeddings inferred online by the PNN.
class DtOnPnnPolicy : public pnn::OnlinePolicy {
 public:
  DtOnPnnPolicy(const pnn::PersonalizedModel& pnn, const DtModel& dt,
                pnn::AdaptConfig config);
  void begin(const dataset::Schedule& schedule) override;
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override;
  void observe(const dataset::Observation& obs) override;

 private:
  const DtModel& dt_;
  pnn::EmbeddingAdapter adapter_;
};

}  // namespace apprentice::baselines
