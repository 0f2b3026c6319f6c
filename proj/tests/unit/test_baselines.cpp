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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "apprentice/baselines/baselines.hpp"
#include "apprentice/envs/lowdim.hpp"
#include "apprentice/envs/scheduling.hpp"

namespace apprentice::baselines {
namespace {

using pairwise::Framing;

dataset::DemonstrationSet lowdim(std::size_t n, std::uint64_t seed,
                                 double lambda_one = 0.5) {
  envs::LowDimConfig c;
  c.schedule_count = n;
  c.seed = seed;
  c.lambda_distribution = lambda_one;
  return envs::generate_lowdim(c);
}

pnn::TrainOptions quick_options() {
  pnn::TrainOptions o;
  o.sgd.epochs = 3;
  o.sgd.learning_rate_model = 0.01;
  o.sgd.momentum = 0.9;
  return o;
}

TEST(Cart, SeparableOneDimensionalSplitsAtTheMidpoint) {
  const std::vector<double> x = {0, 1, 2, 5, 6, 7};
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const auto tree = fit_cart(x, 1, y, {}, 2);
  EXPECT_EQ(tree.depth(), 1u);
  EXPECT_EQ(tree.leaf_count(), 2u);
  EXPECT_EQ(tree.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 3.5);
  const std::vector<double> probe = {3.4};
  EXPECT_EQ(tree.predict(probe), 0);
}

TEST(Cart, PureInputIsASingleLeaf) {
  const std::vector<double> x = {0, 1, 2, 3};
  const std::vector<int> y = {1, 1, 1, 1};
  const auto tree = fit_cart(x, 1, y, {}, 2);
  EXPECT_EQ(tree.depth(), 0u);
  EXPECT_EQ(tree.leaf_count(), 1u);
  const std::vector<double> probe = {10.0};
  EXPECT_EQ(tree.distribution(probe), (std::vector<double>{0.0, 1.0}));
}

TEST(Cart, DepthCapAndDeterminism) {
  Rng rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(400 * 3);
  std::vector<int> y(400);
  for (auto& v : x) v = normal(rng);
  for (std::size_t i = 0; i < 400; ++i) y[i] = (x[3 * i] * x[3 * i + 1] > 0) ? 1 : 0;
  CartConfig config;
  config.max_depth = 3;
  const auto a = fit_cart(x, 3, y, {}, 2, config);
  const auto b = fit_cart(x, 3, y, {}, 2, config);
  EXPECT_LE(a.depth(), 3u);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(CartTree::from_json(a.to_json()).to_json(), a.to_json());
}

TEST(Cart, WeightsActLikeRepetition) {
  const std::vector<double> x = {0, 1, 2};
  const std::vector<int> y = {0, 1, 1};
  const std::vector<double> w = {5.0, 1.0, 1.0};
  CartConfig stump;
  stump.max_depth = 0;
  const auto tree = fit_cart(x, 1, y, w, 2, stump);
  const std::vector<double> probe = {1.0};
  EXPECT_EQ(tree.predict(probe), 0);
}

TEST(Cart, BadInputIsRejected) {
  const std::vector<double> x = {0, 1};
  const std::vector<int> bad = {0, 2};
  EXPECT_THROW(fit_cart(x, 1, bad, {}, 2), std::invalid_argument);
  EXPECT_THROW(fit_cart({}, 1, {}, {}, 2), std::invalid_argument);
}

TEST(PlainDt, LowDimIsNearChance) {
  const auto train = lowdim(40, 1);
  const auto test = lowdim(50, 2);
  const auto dt = fit_plain_dt(train, Framing::kPairwise, CartConfig{});
  DtPolicy policy(dt);
  const double acc = pnn::evaluate_online(policy, test).accuracy();
  EXPECT_GE(acc, 0.40);
  EXPECT_LE(acc, 0.65);
}

TEST(Clustering, KMeansObjectiveNeverIncreases) {
  Rng rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> pts(200, std::vector<double>(3));
  for (auto& p : pts) {
    for (auto& v : p) v = normal(rng);
  }
  const auto km = kmeans(pts, 4, 3);
  ASSERT_FALSE(km.objective.empty());
  for (std::size_t i = 1; i < km.objective.size(); ++i) {
    EXPECT_LE(km.objective[i], km.objective[i - 1] + 1e-9);
  }
}

TEST(Clustering, GmmLikelihoodNeverDecreases) {
  Rng rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> pts(150, std::vector<double>(2));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double shift = i % 3 == 0 ? 4.0 : 0.0;
    for (auto& v : pts[i]) v = normal(rng) + shift;
  }
  const auto g = fit_gmm(pts, 3, 5);
  for (std::size_t i = 1; i < g.log_likelihood.size(); ++i) {
    EXPECT_GE(g.log_likelihood[i], g.log_likelihood[i - 1] - 1e-9);
  }
  for (const auto& r : g.responsibilities) {
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-9);
  }
  EXPECT_NEAR(std::accumulate(g.weights.begin(), g.weights.end(), 0.0), 1.0, 1e-9);
}

TEST(Clustering, SeparableSummariesAreRecovered) {
  Rng rng(9);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<std::vector<double>> pts;
  std::vector<int> truth;
  for (int i = 0; i < 20; ++i) {
    const double c = i % 2 == 0 ? -5.0 : 5.0;
    pts.push_back({c + noise(rng), c + noise(rng)});
    truth.push_back(i % 2);
  }
  const auto km = kmeans(pts, 2, 1);
  const auto g = fit_gmm(pts, 2, 1);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const bool same = truth[i] == truth[0];
    EXPECT_EQ(km.assignment[i] == km.assignment[0], same);
    EXPECT_EQ(pairwise::argmax(g.responsibilities[i]) ==
                  pairwise::argmax(g.responsibilities[0]),
              same);
  }
}

TEST(Clustering, SummaryShape) {
  const auto set = lowdim(2, 3);
  const auto summary = demonstrator_summary({&set.schedules[0]}, set.action_count,
                                            set.action_dim);
  ASSERT_EQ(summary.size(), set.action_dim + set.action_count);
  EXPECT_NEAR(summary[set.action_dim] + summary[set.action_dim + 1], 1.0, 1e-12);
}

TEST(Clustered, SingleClusterEqualsPlainNetwork) {
  const auto train = lowdim(8, 4);
  ClusterConfig config;
  config.k = 1;
  config.network = {{8}, "tanh"};
  config.train = quick_options();
  config.seed = 5;
  const auto clustered = fit_clustered(train, config);
  ASSERT_EQ(clustered.members.size(), 1u);
  auto plain = pnn::make_pnn(train, Framing::kPairwise, 0, config.network, 5);
  pnn::train(plain, train, config.train);
  EXPECT_EQ(clustered.members[0].parameter_checksum(), plain.parameter_checksum());
}

TEST(Clustered, EmptyClustersAreDropped) {
  const auto base = lowdim(2, 6);
  dataset::DemonstrationSet train = base;
  train.schedules.clear();
  for (int copy = 0; copy < 2; ++copy) {
    for (const auto& s : base.schedules) {
      auto dup = s;
      dup.schedule_id = train.schedules.size();
      dup.demonstrator_id = s.demonstrator_id + "-" + std::to_string(copy);
      train.schedules.push_back(dup);
    }
  }
  ClusterConfig config;
  config.k = 3;
  config.network = {{4}, "tanh"};
  config.train = quick_options();
  const auto m = fit_clustered(train, config);
  EXPECT_EQ(m.dropped_clusters, 1u);
  EXPECT_EQ(m.members.size(), 2u);
  EXPECT_NEAR(std::accumulate(m.prior.begin(), m.prior.end(), 0.0), 1.0, 1e-12);
}

TEST(Clustered, RoutingAndJson) {
  const auto train = lowdim(10, 7);
  for (auto method : {ClusterMethod::kKMeans, ClusterMethod::kGmm}) {
    ClusterConfig config;
    config.method = method;
    config.network = {{4}, "tanh"};
    config.train = quick_options();
    const auto m = fit_clustered(train, config);
    const auto back = ClusteredModel::from_json(m.to_json());
    EXPECT_EQ(back.to_json(), m.to_json());
    ClusteredPolicy policy(m);
    const auto r = pnn::evaluate_online(policy, lowdim(3, 8));
    EXPECT_EQ(r.total, 60u);
    EXPECT_LT(policy.current_cluster(), m.members.size());
  }
}

TEST(EmDt, SingleModeIsAbsorbed) {
  const auto train = lowdim(20, 10, 1.0);
  const auto m = fit_em_dt(train, EmDtConfig{});
  std::vector<std::size_t> count(m.modes, 0);
  for (const auto& p : m.mode_probability) ++count[pairwise::argmax(p)];
  const auto top = *std::max_element(count.begin(), count.end());
  EXPECT_GE(static_cast<double>(top), 0.9 * 20.0);
}

TEST(EmDt, DeterministicUnderSeed) {
  const auto train = lowdim(20, 11);
  EmDtConfig config;
  config.seed = 3;
  const auto a = fit_em_dt(train, config);
  const auto b = fit_em_dt(train, config);
  EXPECT_EQ(a.mode_probability, b.mode_probability);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(EmDtModel::from_json(a.to_json()).to_json(), a.to_json());
}

TEST(EmDt, BeatsChanceOnLowDim) {
  const auto m = fit_em_dt(lowdim(40, 12), EmDtConfig{});
  EmDtPolicy policy(m);
  EXPECT_GT(pnn::evaluate_online(policy, lowdim(10, 13)).accuracy(), 0.5);
}

TEST(DtOnPnn, UsesTheEmbeddingColumns) {
  const auto train = lowdim(10, 14);
  auto pnn_model = pnn::make_pnn(train, Framing::kPairwise, 2, {{8}, "tanh"}, 1);
  pnn::train(pnn_model, train, quick_options());
  const auto dt = fit_dt_on_pnn_embeddings(pnn_model, train, CartConfig{});
  EXPECT_EQ(dt.framing, Framing::kStandard);
  EXPECT_EQ(dt.embedding_dim, 2u);
  EXPECT_EQ(dt.tree.width(), 2u + train.context_dim + train.action_count * train.action_dim);
  DtOnPnnPolicy policy(pnn_model, dt, pnn::AdaptConfig{});
  EXPECT_EQ(pnn::evaluate_online(policy, lowdim(2, 15)).total, 40u);
  EXPECT_EQ(DtModel::from_json(dt.to_json()).to_json(), dt.to_json());
}

}  // namespace
}  // namespace apprentice::baselines
