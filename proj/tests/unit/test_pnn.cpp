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

#include <filesystem>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "apprentice/dataset/dataset.hpp"
#include "apprentice/envs/lowdim.hpp"
#include "apprentice/pnn/checkpoint.hpp"
#include "apprentice/pnn/mlp.hpp"
#include "apprentice/pnn/personalized_model.hpp"
#include "property_checks.hpp"

namespace apprentice::pnn {
namespace {

using pairwise::Framing;

envs::LowDimData lowdim(std::size_t n, std::uint64_t seed) {
  envs::LowDimConfig c;
  c.schedule_count = n;
  c.seed = seed;
  return envs::generate_lowdim_with_modes(c);
}

// One low-dim PNN shared by the slower tests.
class TrainedLowDim : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    train_ = new envs::LowDimData(lowdim(40, 1));
    model_ = new PersonalizedModel(
        make_pnn(train_->set, Framing::kPairwise, 2, NetworkConfig{}, 1));
    TrainOptions options;
    options.sgd.epochs = 50;
    options.sgd.learning_rate_model = 0.01;
    options.sgd.learning_rate_embedding = 0.1;
    options.sgd.momentum = 0.9;
    train(*model_, train_->set, options);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete train_;
  }
  static double accuracy_with(const dataset::Schedule& s,
                              std::span<const double> embedding,
                              std::size_t from = 0) {
    std::size_t hits = 0;
    for (std::size_t t = from; t < s.observations.size(); ++t) {
      const auto& obs = s.observations[t];
      hits += model_->predict(obs, embedding).action == obs.taken_actions[0];
    }
    return static_cast<double>(hits) /
           static_cast<double>(s.observations.size() - from);
  }
  static envs::LowDimData* train_;
  static PersonalizedModel* model_;
};

envs::LowDimData* TrainedLowDim::train_ = nullptr;
PersonalizedModel* TrainedLowDim::model_ = nullptr;

TEST(Gradients, ParametersAndEmbeddings) {
  for (bool multi : {false, true}) {
    const auto r = checks::check_pnn_gradients(multi);
    EXPECT_TRUE(r.passed) << r.detail;
  }
}

TEST(Gradients, ObservationEmbeddingGradient) {
  const auto data = lowdim(2, 3);
  auto model = make_pnn(data.set, Framing::kPairwise, 3, {{8, 8}, "tanh"}, 2);
  const auto& obs = data.set.schedules[0].observations[1];
  std::vector<double> w = {0.3, -0.4, 0.2};
  std::vector<double> grad(3);
  observation_embedding_gradient(model, obs, w, grad);
  std::vector<double> none(3);
  for (std::size_t k = 0; k < 3; ++k) {
    auto up = w;
    auto down = w;
    up[k] += checks::kFiniteStep;
    down[k] -= checks::kFiniteStep;
    const double numeric = (observation_embedding_gradient(model, obs, up, none) -
                            observation_embedding_gradient(model, obs, down, none)) /
                           (2 * checks::kFiniteStep);
    EXPECT_LT(checks::relative_error(grad[k], numeric), checks::kGradientTolerance);
  }
}

TEST(Mlp, WidthMismatchIsRejected) {
  Mlp net({3, 4, 2}, Activation::kTanh, 1);
  std::vector<double> x(2), logits(2), ws(net.workspace_size());
  EXPECT_THROW(net.forward(x, logits, ws), std::invalid_argument);
}

TEST(Adaptation, FrozenWeights) {
  for (bool multi : {false, true}) {
    const auto r = checks::check_frozen_adaptation(multi);
    EXPECT_TRUE(r.passed) << r.detail;
  }
}

TEST(Adaptation, ZeroStepsKeepsTheMeanEmbedding) {
  const auto data = lowdim(6, 2);
  auto model = make_pnn(data.set, Framing::kPairwise, 2, {{8}, "tanh"}, 2);
  TrainOptions options;
  options.sgd.epochs = 1;
  train(model, data.set, options);
  AdaptConfig none;
  none.steps_per_observation = 0;
  const auto mean = model.embeddings().mean();
  EXPECT_EQ(adapt_embedding(model, data.set.schedules[0], none).values, mean);
  dataset::Schedule empty;
  EXPECT_EQ(adapt_embedding(model, empty, AdaptConfig{}).values, mean);
}

TEST(Checkpoint, RoundTrip) {
  const auto data = lowdim(4, 5);
  auto model = make_pnn(data.set, Framing::kPairwise, 2, {{8}, "relu"}, 4);
  TrainOptions options;
  options.sgd.epochs = 2;
  train(model, data.set, options);
  const auto path =
      std::filesystem::temp_directory_path() / "apprentice_pnn_test.json";
  save_model(model, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.to_json(), model.to_json());
  EXPECT_EQ(back.parameter_checksum(), model.parameter_checksum());
  const auto& obs = data.set.schedules[1].observations[0];
  const auto w = model.embeddings().mean();
  EXPECT_EQ(back.predict(obs, w).probabilities, model.predict(obs, w).probabilities);
}

TEST_F(TrainedLowDim, PredictIsDeterministic) {
  const auto& obs = train_->set.schedules[0].observations[0];
  const auto w = model_->embeddings().mean();
  EXPECT_EQ(model_->predict(obs, w).probabilities,
            model_->predict(obs, w).probabilities);
}

TEST_F(TrainedLowDim, AccuracyRisesWithObservedPrefix) {
  const auto test = lowdim(40, 77);
  double acc[3] = {0, 0, 0};
  const std::size_t ks[3] = {0, 5, 10};
  for (const auto& s : test.set.schedules) {
    for (int i = 0; i < 3; ++i) {
      EmbeddingAdapter adapter(*model_, AdaptConfig{});
      for (std::size_t t = 0; t < ks[i]; ++t) adapter.observe(s.observations[t]);
      acc[i] += accuracy_with(s, adapter.current(), ks[i]) / 40.0;
    }
  }
  EXPECT_LE(acc[0], acc[1]);
  EXPECT_LE(acc[1], acc[2]);
  EXPECT_GT(acc[2], acc[0] + 0.2);
}

TEST_F(TrainedLowDim, AdaptedModeOneDemonstratorPicksActionOne) {
  const auto test = lowdim(20, 78);
  for (std::size_t s = 0; s < test.lambdas.size(); ++s) {
    if (test.lambdas[s] != 1) continue;
    const auto w = adapt_embedding(*model_, test.set.schedules[s], AdaptConfig{});
    dataset::Observation probe = test.set.schedules[s].observations[0];
    probe.context = {1.0, 0.5};
    EXPECT_EQ(model_->predict(probe, w.values).action, 1);
    return;
  }
  FAIL() << "no mode-1 schedule generated";
}

TEST_F(TrainedLowDim, ModeMeanEmbeddingMatchesOwnEmbedding) {
  const auto& table = model_->embeddings();
  std::vector<double> mean[2] = {std::vector<double>(2), std::vector<double>(2)};
  double count[2] = {0, 0};
  for (std::size_t s = 0; s < train_->lambdas.size(); ++s) {
    const int m = train_->lambdas[s] - 1;
    const auto row = table.row(table.index_of(train_->set.schedules[s].demonstrator_id));
    for (std::size_t k = 0; k < 2; ++k) mean[m][k] += row[k];
    count[m] += 1.0;
  }
  for (int m = 0; m < 2; ++m) {
    for (auto& v : mean[m]) v /= count[m];
  }
  double own = 0.0;
  double pooled = 0.0;
  const auto n = static_cast<double>(train_->lambdas.size());
  for (std::size_t s = 0; s < train_->lambdas.size(); ++s) {
    const auto& sched = train_->set.schedules[s];
    own += accuracy_with(sched, table.row(table.index_of(sched.demonstrator_id))) / n;
    pooled += accuracy_with(sched, mean[train_->lambdas[s] - 1]) / n;
  }
  EXPECT_NEAR(own, pooled, 0.02);
}

}  // namespace
}  // namespace apprentice::pnn
