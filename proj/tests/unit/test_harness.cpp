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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "apprentice/harness/harness.hpp"

namespace apprentice::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig quick(ModelKind model, std::vector<std::uint64_t> seeds = {1, 2}) {
  ExperimentConfig c;
  c.domain = dataset::DomainTag::kLowDim;
  c.model = model;
  c.seeds = std::move(seeds);
  c.schedules = 20;
  c.hyperparameters = {{"epochs", 5}};
  if (model == ModelKind::kDt || model == ModelKind::kEmDt) {
    c.hyperparameters = {{"calibrated", true}};
  }
  return c;
}

json strip_timing(json report) {
  report.erase("wall_seconds");
  for (auto& s : report.at("seeds")) s.erase("wall_seconds");
  return report;
}

MetricsReport fake_report(const std::string& model, std::vector<double> acc,
                          std::uint64_t fingerprint = 42) {
  ExperimentConfig c;
  c.model = model_from_string(model);
  if (c.model == ModelKind::kDt || c.model == ModelKind::kEmDt ||
      c.model == ModelKind::kDdt || c.model == ModelKind::kPddt) {
    c.hyperparameters = {{"calibrated", true}};
  }
  MetricsReport r;
  r.config = c.to_json();
  r.label = c.label();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    SeedResult s;
    s.seed = i + 1;
    s.accuracy = acc[i];
    s.prequential_accuracy = acc[i] - 0.01;
    s.mean_loss = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
    s.dataset_fingerprint = fingerprint + i;
    if (model == "pddt") {
      s.has_crisp = true;
      s.crisp_accuracy = acc[i] - 0.02;
    }
    r.seeds.push_back(s);
  }
  return r;
}

TEST(Config, Defaults) {
  using dataset::DomainTag;
  EXPECT_EQ(default_hyperparameters(DomainTag::kLowDim, ModelKind::kPnn, false)
                .embedding_dim, 2u);
  EXPECT_EQ(default_hyperparameters(DomainTag::kScheduling, ModelKind::kPddt, false)
                .embedding_dim, 3u);
  EXPECT_EQ(default_hyperparameters(DomainTag::kLowDim, ModelKind::kNn, false)
                .embedding_dim, 0u);
  ExperimentConfig c;
  EXPECT_EQ(c.schedule_count(), 50u);
  c.domain = DomainTag::kScheduling;
  EXPECT_EQ(c.schedule_count(), 150u);
}

TEST(Config, RejectsBadInput) {
  const json base = ExperimentConfig{}.to_json();
  auto with = [&](const std::string& key, json value) {
    json j = base;
    j[key] = std::move(value);
    return j;
  };
  EXPECT_NO_THROW(ExperimentConfig::from_json(base));
  EXPECT_THROW(ExperimentConfig::from_json(with("colour", "red")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("domain", "chess")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("model", "svm")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("seeds", {1, 1})), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("train_fraction", 1.5)), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("multi_label", true)), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(with("model", "dt")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(
                   with("hyperparameters", {{"embedding_dim", 0}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(
                   with("hyperparameters", {{"learning_rat", 0.1}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(
                   with("hyperparameters", {{"epochs", "many"}})),
               ConfigError);
}

TEST(Config, FingerprintIgnoresTheOutputDirectory) {
  ExperimentConfig a;
  ExperimentConfig b;
  b.output_dir = "/tmp/elsewhere";
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.seeds = {1, 2, 3};
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(ExperimentConfig::from_json(a.to_json()).to_json(), a.to_json());
}

TEST(Config, LoadFromFile) {
  const auto path = fs::temp_directory_path() / "apprentice_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"domain": "scheduling", "model": "pddt", "seeds": [3],
               "hyperparameters": {"tree_depth": 5}})";
  }
  const auto c = load_config(path);
  EXPECT_EQ(c.domain, dataset::DomainTag::kScheduling);
  EXPECT_EQ(c.resolved().tree_depth, 5u);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(load_config(path), ConfigError);
  fs::remove(path);
}

TEST(Summary, SampleStatistics) {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
  EXPECT_EQ(s.n, 3u);
  const std::vector<double> one = {0.5};
  EXPECT_EQ(summarize(one).stddev, 0.0);
}

TEST(Run, RepeatedRunsAreIdentical) {
  const auto a = run(quick(ModelKind::kPnn));
  const auto b = run(quick(ModelKind::kPnn));
  ASSERT_FALSE(a.failed) << a.error;
  EXPECT_EQ(strip_timing(a.to_json()), strip_timing(b.to_json()));
}

TEST(Run, WritesArtifactsThatReload) {
  auto c = quick(ModelKind::kPddt, {4});
  const auto dir = fs::temp_directory_path() / "apprentice_run_test";
  fs::remove_all(dir);
  c.output_dir = dir.string();
  const auto report = run(c);
  ASSERT_FALSE(report.failed) << report.error;
  ASSERT_TRUE(report.seeds.front().has_crisp);
  EXPECT_TRUE(fs::exists(dir / "seed_4" / "tree.txt"));
  const auto back = read_report(dir / "report.json");
  EXPECT_EQ(back.to_json(), report.to_json());

  const auto model = load_trained(dir / "seed_4" / "model.json");
  const auto test = dataset::load(dir / "seed_4" / "test.dataset");
  auto policy = model.policy();
  EXPECT_DOUBLE_EQ(pnn::evaluate_online(*policy, test).accuracy(),
                   report.seeds.front().accuracy);
  auto crisp = model.crisp_policy();
  ASSERT_NE(crisp, nullptr);
  EXPECT_DOUBLE_EQ(pnn::evaluate_online(*crisp, test).accuracy(),
                   report.seeds.front().crisp_accuracy);
  fs::remove_all(dir);
}

TEST(Run, FailureKeepsEarlierSeeds) {
  auto c = quick(ModelKind::kNn, {1, 2});
  const auto dir = fs::temp_directory_path() / "apprentice_fail_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // A plain file where seed 2's artifact directory should go.
  std::ofstream(dir / "seed_2") << "in the way";
  c.output_dir = dir.string();
  const auto report = run(c);
  EXPECT_TRUE(report.failed);
  EXPECT_NE(report.error.find("seed 2"), std::string::npos) << report.error;
  ASSERT_EQ(report.seeds.size(), 1u);
  EXPECT_EQ(report.seeds[0].seed, 1u);
  EXPECT_TRUE(read_report(dir / "report.json").failed);
  fs::remove_all(dir);
}

TEST(Compare, SelfComparisonIsZero) {
  const auto r = fake_report("pnn", {0.9, 0.8, 0.85});
  const auto c = compare({r, r});
  EXPECT_EQ(c.mean_difference[0][1], 0.0);
  EXPECT_EQ(c.wins[0][1], 0u);
  EXPECT_FALSE(c.render().empty());
}

TEST(Compare, MismatchedDatasetsAreRejected) {
  EXPECT_THROW(compare({fake_report("pnn", {0.9}), fake_report("nn", {0.5}, 7)}),
               CompareError);
  EXPECT_THROW(compare({fake_report("pnn", {0.9})}), CompareError);
}

TEST(Compare, PnnRanksAboveDtOnLowDim) {
  auto pnn_config = quick(ModelKind::kPnn, {1, 2});
  pnn_config.schedules = 50;
  pnn_config.hyperparameters = json::object();
  auto dt_config = quick(ModelKind::kDt, {1, 2});
  dt_config.schedules = 50;
  const auto c = compare({run(dt_config), run(pnn_config)});
  EXPECT_EQ(c.rows.front().label, "pnn/pairwise");
  EXPECT_GT(c.mean_difference[0][1], 0.0);
}

TEST(PlotData, ThirtyFiveRowsRoundTrip) {
  std::vector<MetricsReport> reports;
  for (const char* m : {"pnn", "pddt", "nn", "ddt", "dt", "kmeans-nn", "gmm-nn"}) {
    reports.push_back(fake_report(m, {0.91, 0.52, 0.73, 0.64, 0.85}));
  }
  std::stringstream out;
  emit_plot_data(reports, out);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kPlotHeader);
  const auto rows = read_plot_data(out);
  ASSERT_EQ(rows.size(), 35u);
  EXPECT_EQ(rows[0].model, "pnn");
  EXPECT_DOUBLE_EQ(rows[0].loss, 1.0 / 3.0);
  EXPECT_FALSE(rows[0].crisp_accuracy.has_value());
  ASSERT_TRUE(rows[5].crisp_accuracy.has_value());
  EXPECT_DOUBLE_EQ(*rows[5].crisp_accuracy, 0.91 - 0.02);
  std::stringstream again;
  emit_plot_data(reports, again);
  EXPECT_EQ(read_plot_data(again), rows);
}

TEST(Reproduce, SuiteShape) {
  ReproduceOptions o;
  const auto suite = reproduction_suite(o);
  std::size_t low = 0;
  std::size_t multi = 0;
  for (const auto& c : suite) {
    EXPECT_NO_THROW(c.validate());
    low += c.domain == dataset::DomainTag::kLowDim;
    multi += c.multi_label;
  }
  EXPECT_EQ(low, 9u);
  EXPECT_EQ(suite.size(), 20u);
  EXPECT_EQ(multi, 1u);
}

}  // namespace
}  // namespace apprentice::harness
