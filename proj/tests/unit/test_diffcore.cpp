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

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "apprentice/diffcore/loss.hpp"
#include "apprentice/diffcore/parameter.hpp"
#include "apprentice/diffcore/tape.hpp"
#include "property_checks.hpp"

namespace apprentice::diffcore {
namespace {

TEST(Tape, SigmoidAtZero) {
  Tape t;
  auto x = t.input();
  t.mark_output(t.sigmoid(x));
  const std::vector<double> in = {0.0};
  EXPECT_DOUBLE_EQ(t.forward(in)[0], 0.5);
  const std::vector<double> up = {1.0};
  t.backward(up);
  EXPECT_DOUBLE_EQ(t.input_gradients()[0], 0.25);
}

TEST(Tape, ProductAndSquare) {
  Tape t;
  auto x = t.input();
  auto y = t.input();
  t.mark_output(t.mul(x, y));
  t.mark_output(t.mul(x, x));
  const std::vector<double> in = {3.0, 4.0};
  const auto out = t.forward(in);
  EXPECT_DOUBLE_EQ(out[0], 12.0);
  const std::vector<double> up = {0.0, 1.0};
  t.backward(up);
  EXPECT_DOUBLE_EQ(t.input_gradients()[0], 6.0);
}

TEST(Tape, SoftmaxOfEqualLogits) {
  Tape t;
  std::vector<Var> logits = {t.input(), t.input()};
  for (auto v : softmax(t, logits)) t.mark_output(v);
  const std::vector<double> in = {0.0, 0.0};
  const auto out = t.forward(in);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
}

TEST(Tape, BackwardBeforeForwardIsRejected) {
  Tape t;
  t.mark_output(t.exp(t.input()));
  const std::vector<double> up = {1.0};
  EXPECT_ANY_THROW(t.backward(up));
}

TEST(Tape, DomainErrors) {
  Tape t;
  auto x = t.input();
  t.mark_output(t.log(x));
  const std::vector<double> bad = {-1.0};
  EXPECT_THROW(t.forward(bad), DomainError);

  Tape d;
  auto a = d.input();
  auto b = d.input();
  d.mark_output(d.div(a, b));
  const std::vector<double> zero = {1.0, 0.0};
  EXPECT_THROW(d.forward(zero), DomainError);
}

TEST(Tape, FrozenParameterGetsNoGradient) {
  Tape t;
  auto w = t.parameter(2.0, false);
  auto x = t.input();
  t.mark_output(t.mul(w, x));
  const std::vector<double> in = {5.0};
  t.forward(in);
  const std::vector<double> up = {1.0};
  t.backward(up);
  EXPECT_EQ(t.parameters().gradient[0], 0.0);
  EXPECT_DOUBLE_EQ(t.input_gradients()[0], 2.0);
}

TEST(Tape, RandomCompositionsMatchFiniteDifferences) {
  const auto r = checks::check_random_tapes(1000, 7);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Sgd, PlainStep) {
  ParameterBlock b(1);
  b.value[0] = 1.0;
  b.gradient[0] = 0.5;
  SgdConfig c;
  c.learning_rate_model = 0.1;
  Sgd sgd(c);
  sgd.step(b);
  EXPECT_DOUBLE_EQ(b.value[0], 0.95);
  sgd.step(b);
  EXPECT_DOUBLE_EQ(b.value[0], 0.95);
}

TEST(Sgd, MomentumRecurrence) {
  ParameterBlock b(1);
  SgdConfig c;
  c.learning_rate_model = 0.1;
  c.momentum = 0.9;
  Sgd sgd(c);
  // Frozen from tests/oracles/hand_values.py.
  b.gradient[0] = 1.0;
  sgd.step(b);
  EXPECT_NEAR(b.value[0], -0.1, 1e-15);
  b.gradient[0] = 1.0;
  sgd.step(b);
  EXPECT_NEAR(b.value[0], -0.29000000000000004, 1e-15);
}

TEST(Sgd, NonFiniteGradientIsRejected) {
  ParameterBlock b(2);
  b.value = {1.0, 1.0};
  b.gradient = {std::numeric_limits<double>::quiet_NaN(), 1.0};
  Sgd sgd(SgdConfig{});
  sgd.step(b);
  EXPECT_EQ(sgd.rejected_updates(), 1u);
  EXPECT_EQ(b.value[0], 1.0);
  EXPECT_LT(b.value[1], 1.0);
}

TEST(Sgd, EmbeddingGroupUsesItsOwnRate) {
  SgdConfig c;
  c.learning_rate_model = 0.01;
  c.learning_rate_embedding = 0.1;
  Sgd sgd(c);
  EXPECT_DOUBLE_EQ(sgd.learning_rate(ParameterGroup::kEmbedding), 0.1);
  EXPECT_DOUBLE_EQ(sgd.learning_rate(ParameterGroup::kModel), 0.01);
}

TEST(Checksum, SensitiveToEveryBit) {
  std::vector<double> v = {1.0, 2.0, 3.0};
  const auto base = checksum(v);
  EXPECT_EQ(base, checksum(v));
  v[1] = std::nextafter(2.0, 3.0);
  EXPECT_NE(base, checksum(v));
}

TEST(Renyi, IdenticalDistributionsGiveZero) {
  const std::vector<double> p = {1.0, 0.0};
  for (double alpha : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(renyi_loss(p, p, alpha), 0.0, 1e-6) << alpha;
  }
}

TEST(Renyi, HalfHalfAgainstOneHot) {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> t = {1.0, 0.0};
  // Frozen from tests/oracles/hand_values.py.
  EXPECT_NEAR(renyi_loss(p, t, 1.0), 0.6931471805599453, 1e-12);
  EXPECT_NEAR(renyi_loss(p, t, 2.0), 0.6931471805599453, 1e-12);
}

TEST(Renyi, ClampsZeroProbabilities) {
  const std::vector<double> p = {0.0, 1.0};
  const std::vector<double> t = {1.0, 0.0};
  LossStats stats;
  const double l = renyi_loss(p, t, 1.0, &stats);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, -std::log(kProbabilityEpsilon), 1e-9);
  EXPECT_GE(stats.clamp_events, 1u);
}

TEST(Renyi, GradientMatchesFiniteDifference) {
  // The loss only accepts distributions, so differentiate along e_i - e_j.
  const std::vector<double> p = {0.2, 0.5, 0.3};
  const std::vector<double> t = {0.1, 0.9, 0.0};
  for (double alpha : {1.0, 2.0, 0.5}) {
    std::vector<double> g(3);
    renyi_loss(p, t, alpha, nullptr, g);
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t j = (i + 1) % 3;
      const double h = 1e-6;
      auto q = p;
      q[i] += h;
      q[j] -= h;
      const double up = renyi_loss(q, t, alpha);
      q[i] -= 2 * h;
      q[j] += 2 * h;
      const double down = renyi_loss(q, t, alpha);
      EXPECT_LT(checks::relative_error(g[i] - g[j], (up - down) / (2 * h)),
                1e-4)
          << "alpha " << alpha << " direction " << i;
    }
  }
}

TEST(BinaryHeads, SumsPerHeadLosses) {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> t = {1.0, 0.0};
  EXPECT_NEAR(binary_heads_renyi_loss(p, t, 1.0), 2.0 * std::log(2.0), 1e-12);
}

TEST(Softmax, NormalizesAndRespectsMask) {
  const std::vector<double> logits = {1.0, 3.0, -2.0, 0.5};
  std::vector<double> out(4);
  softmax(logits, out);
  double sum = 0.0;
  for (double v : out) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const std::vector<unsigned char> mask = {1, 0, 1, 1};
  softmax(logits, out, mask);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_NEAR(out[0] + out[2] + out[3], 1.0, 1e-12);
}

}  // namespace
}  // namespace apprentice::diffcore
