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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "apprentice/baselines/baselines.hpp"
#include "apprentice/dataset/dataset.hpp"
#include "apprentice/diffcore/parameter.hpp"
#include "apprentice/pairwise/pairwise.hpp"
#include "apprentice/pddt/pddt.hpp"
#include "apprentice/pnn/personalized_model.hpp"

namespace apprentice::harness {

/// Invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind {
  kPnn,
  kPddt,
  kNn,
  kDdt,
  kDt,
  kKMeansNn,
  kGmmNn,
  kEmDt,
  kDtPnnEmb,
};

const char* to_string(ModelKind kind);
ModelKind model_from_string(const std::string& name);
const std::vector<ModelKind>& all_models();

/// Every tunable knob, resolved from per-(domain, model) defaults and the
/// config's "hyperparameters" overrides.
struct Hyperparameters {
  std::size_t embedding_dim = 3;
  std::vector<std::size_t> hidden = {32, 32};
  std::string activation = "tanh";
  std::size_t tree_depth = 4;
  diffcore::SgdConfig sgd;
  double embedding_init_std = 0.1;
  pnn::AdaptConfig adapt;
  std::size_t cart_depth = 10;
  std::size_t clusters = 2;
  std::size_t em_iterations = 10;
  /// Trees score comparisons by leaf class frequencies.
  bool calibrated = false;

  nlohmann::json to_json() const;
};

Hyperparameters default_hyperparameters(dataset::DomainTag domain,
                                        ModelKind model, bool multi_label);

/// Applies {"key": value} overrides. Unknown keys or ill-typed values throw
/// ConfigError.
void apply_overrides(Hyperparameters& h, const nlohmann::json& overrides);

struct ExperimentConfig {
  dataset::DomainTag domain = dataset::DomainTag::kLowDim;
  ModelKind model = ModelKind::kPnn;
  pairwise::Framing framing = pairwise::Framing::kPairwise;
  bool multi_label = false;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  /// 0 selects the domain default (50 low-dim, 150 scheduling).
  std::size_t schedules = 0;
  double train_fraction = 0.8;
  /// Crisp-tree metrics are added for PDDT/DDT runs.
  bool crispify = true;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::string output_dir;

  std::size_t schedule_count() const;
  Hyperparameters resolved() const;
  /// Throws ConfigError on the first problem.
  void validate() const;
  /// e.g. "pnn/pairwise"
  std::string label() const;
  std::uint64_t fingerprint() const;

  nlohmann::json to_json() const;
  /// Unknown keys are rejected; the result is validated.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

ExperimentConfig load_config(const std::filesystem::path& path);

dataset::DemonstrationSet generate_dataset(dataset::DomainTag domain,
                                           std::size_t schedules,
                                           std::uint64_t seed,
                                           bool multi_label = false);

/// Any trained model the harness can evaluate.
struct TrainedModel {
  ModelKind kind = ModelKind::kPnn;
  std::optional<pnn::PersonalizedModel> network;
  std::optional<pddt::CrispTree> crisp;
  std::optional<baselines::DtModel> tree;
  std::optional<baselines::ClusteredModel> clustered;
  std::optional<baselines::EmDtModel> em;
  pnn::AdaptConfig adapt;
  std::vector<double> train_loss;

  std::unique_ptr<pnn::OnlinePolicy> policy() const;
  /// Policy of the crisp tree; nullptr when there is none.
  std::unique_ptr<pnn::OnlinePolicy> crisp_policy() const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

TrainedModel train_model(const ExperimentConfig& config,
                         const dataset::DemonstrationSet& train,
                         std::uint64_t seed);

void save_trained(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_trained(const std::filesystem::path& path);

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation; 0 for fewer than two values.
  double stddev = 0.0;
  std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

struct SeedResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double prequential_accuracy = 0.0;
  double mean_loss = 0.0;
  double mean_head_loss = 0.0;
  bool has_crisp = false;
  double crisp_accuracy = 0.0;
  double crisp_prequential_accuracy = 0.0;
  double crisp_head_loss = 0.0;
  std::size_t test_timesteps = 0;
  std::size_t degenerate_predictions = 0;
  std::map<std::pair<int, int>, std::size_t> confusion;
  std::uint64_t dataset_fingerprint = 0;
  double wall_seconds = 0.0;
  /// Model-specific extras (e.g. the PNN accuracy behind a DT-on-PNN run).
  nlohmann::json details = nlohmann::json::object();
};

struct MetricsReport {
  nlohmann::json config;
  std::string label;
  std::string version;
  std::uint64_t config_fingerprint = 0;
  std::vector<SeedResult> seeds;
  bool failed = false;
  std::string error;
  double wall_seconds = 0.0;

  Summary accuracy() const;
  Summary crisp_accuracy() const;
  Summary head_loss() const;
  Summary crisp_head_loss() const;
  /// Combined fingerprint of every seed's dataset.
  std::uint64_t dataset_fingerprint() const;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// Generates data for each seed, trains, evaluates on the held-out
/// schedules and, if config.output_dir is set, writes report.json there plus
/// seed_<n>/model.json and seed_<n>/test.dataset for every seed. A failing seed marks the report failed and
/// stops the run; earlier seeds are kept.
MetricsReport run(const ExperimentConfig& config, std::ostream* log = nullptr);

void write_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport read_report(const std::filesystem::path& path);

class CompareError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Comparison {
  struct Row {
    std::string label;
    Summary accuracy;
  };
  /// Sorted by mean accuracy, best first.
  std::vector<Row> rows;
  /// mean_difference[i][j] = rows[i].mean - rows[j].mean
  std::vector<std::vector<double>> mean_difference;
  /// wins[i][j] = seeds on which rows[i] scored strictly higher than rows[j]
  std::vector<std::vector<std::size_t>> wins;

  std::string render() const;
};

/// Requires at least two completed reports over the same datasets.
Comparison compare(const std::vector<MetricsReport>& reports);

/// One row per (report, seed):
/// domain,model,framing,seed,accuracy,prequential_accuracy,loss,head_loss,crisp_accuracy
/// crisp_accuracy is empty when the model has no crisp tree.
inline constexpr const char* kPlotHeader =
    "domain,model,framing,seed,accuracy,prequential_accuracy,loss,head_loss,"
    "crisp_accuracy";

struct PlotRow {
  std::string domain;
  std::string model;
  std::string framing;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double prequential_accuracy = 0.0;
  double loss = 0.0;
  double head_loss = 0.0;
  std::optional<double> crisp_accuracy;

  bool operator==(const PlotRow&) const = default;
};

void emit_plot_data(const std::vector<MetricsReport>& reports, std::ostream& out);
std::vector<PlotRow> read_plot_data(std::istream& in);

struct ReproduceOptions {
  std::vector<dataset::DomainTag> domains = {dataset::DomainTag::kLowDim,
                                             dataset::DomainTag::kScheduling};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::filesystem::path output_root;
  /// Adds the multi-label scheduling PDDT run.
  bool multi_label = true;
};

/// The configurations reproduce() runs, in order.
std::vector<ExperimentConfig> reproduction_suite(const ReproduceOptions& options);

/// Runs the suite and writes every report plus plot_data.csv, table1.csv
/// and comparison_<domain>.txt under output_root.
std::vector<MetricsReport> reproduce(const ReproduceOptions& options,
                                     std::ostream* log = nullptr);

std::string version_string();

}  // namespace apprentice::harness
