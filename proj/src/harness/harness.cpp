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

#include "apprentice/harness/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "apprentice/envs/lowdim.hpp"
#include "apprentice/envs/scheduling.hpp"
#include "apprentice/pnn/checkpoint.hpp"
#include "apprentice/pnn/mlp.hpp"

#ifndef APPRENTICE_VERSION
#define APPRENTICE_VERSION "unknown"
#endif

namespace apprentice::harness {

using dataset::DomainTag;
using pairwise::Framing;
using Json = nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_tree_model(ModelKind m) {
  return m == ModelKind::kDt || m == ModelKind::kEmDt || m == ModelKind::kDtPnnEmb;
}

bool is_differentiable_tree(ModelKind m) {
  return m == ModelKind::kPddt || m == ModelKind::kDdt;
}

bool is_personalized(ModelKind m) {
  return m == ModelKind::kPnn || m == ModelKind::kPddt || m == ModelKind::kDtPnnEmb;
}

const char* adapt_mode_name(pnn::AdaptMode m) {
  return m == pnn::AdaptMode::kOnline ? "online" : "batch";
}

pnn::AdaptMode adapt_mode_from(const std::string& s) {
  if (s == "online") return pnn::AdaptMode::kOnline;
  if (s == "batch") return pnn::AdaptMode::kBatch;
  throw ConfigError("adapt_mode must be online or batch, got " + s);
}

Json adapt_json(const pnn::AdaptConfig& a) {
  return {{"learning_rate", a.learning_rate},
          {"steps_per_observation", a.steps_per_observation},
          {"batch_passes", a.batch_passes},
          {"mode", adapt_mode_name(a.mode)}};
}

pnn::AdaptConfig adapt_from_json(const Json& j) {
  pnn::AdaptConfig a;
  a.learning_rate = j.at("learning_rate").get<double>();
  a.steps_per_observation = j.at("steps_per_observation").get<std::size_t>();
  a.batch_passes = j.at("batch_passes").get<std::size_t>();
  a.mode = adapt_mode_from(j.at("mode").get<std::string>());
  return a;
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ------------------------------------------------------------------ models

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPnn: return "pnn";
    case ModelKind::kPddt: return "pddt";
    case ModelKind::kNn: return "nn";
    case ModelKind::kDdt: return "ddt";
    case ModelKind::kDt: return "dt";
    case ModelKind::kKMeansNn: return "kmeans-nn";
    case ModelKind::kGmmNn: return "gmm-nn";
    case ModelKind::kEmDt: return "em-dt";
    case ModelKind::kDtPnnEmb: return "dt-pnn-emb";
  }
  return "?";
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kAll = {
      ModelKind::kPnn,     ModelKind::kPddt,  ModelKind::kNn,
      ModelKind::kDdt,     ModelKind::kDt,    ModelKind::kKMeansNn,
      ModelKind::kGmmNn,   ModelKind::kEmDt,  ModelKind::kDtPnnEmb};
  return kAll;
}

ModelKind model_from_string(const std::string& name) {
  for (auto m : all_models()) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown model: " + name);
}

// --------------------------------------------------------- hyperparameters

Json Hyperparameters::to_json() const {
  return {{"embedding_dim", embedding_dim},
          {"hidden", hidden},
          {"activation", activation},
          {"tree_depth", tree_depth},
          {"epochs", sgd.epochs},
          {"batch_size", sgd.batch_size},
          {"learning_rate", sgd.learning_rate_model},
          {"embedding_learning_rate", sgd.learning_rate_embedding},
          {"momentum", sgd.momentum},
          {"embedding_init_std", embedding_init_std},
          {"adapt_learning_rate", adapt.learning_rate},
          {"adapt_steps", adapt.steps_per_observation},
          {"adapt_batch_passes", adapt.batch_passes},
          {"adapt_mode", adapt_mode_name(adapt.mode)},
          {"cart_depth", cart_depth},
          {"clusters", clusters},
          {"em_iterations", em_iterations},
          {"calibrated", calibrated}};
}

Hyperparameters default_hyperparameters(DomainTag domain, ModelKind model,
                                        bool /*multi_label*/) {
  Hyperparameters h;
  const bool low = domain == DomainTag::kLowDim;
  if (is_differentiable_tree(model)) {
    h.sgd.epochs = low ? 300 : 60;
    h.sgd.learning_rate_model = low ? 0.5 : 0.02;
    h.sgd.momentum = low ? 0.0 : 0.9;
    h.sgd.learning_rate_embedding = 0.3;
    h.adapt.learning_rate = 0.1;
  } else {
    h.sgd.epochs = low ? 50 : 20;
    h.sgd.learning_rate_model = 0.01;
    h.sgd.momentum = 0.9;
    h.sgd.learning_rate_embedding = 0.1;
    h.adapt.learning_rate = low ? 0.1 : 0.3;
  }
  h.embedding_dim = low ? 2 : 3;
  if (!is_personalized(model)) h.embedding_dim = 0;
  return h;
}

void apply_overrides(Hyperparameters& h, const Json& overrides) {
  if (!overrides.is_object()) throw ConfigError("hyperparameters must be an object");
  for (const auto& [key, v] : overrides.items()) {
    try {
      if (key == "embedding_dim") h.embedding_dim = v.get<std::size_t>();
      else if (key == "hidden") h.hidden = v.get<std::vector<std::size_t>>();
      else if (key == "activation") h.activation = v.get<std::string>();
      else if (key == "tree_depth") h.tree_depth = v.get<std::size_t>();
      else if (key == "epochs") h.sgd.epochs = v.get<std::size_t>();
      else if (key == "batch_size") h.sgd.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") h.sgd.learning_rate_model = v.get<double>();
      else if (key == "embedding_learning_rate") h.sgd.learning_rate_embedding = v.get<double>();
      else if (key == "momentum") h.sgd.momentum = v.get<double>();
      else if (key == "embedding_init_std") h.embedding_init_std = v.get<double>();
      else if (key == "adapt_learning_rate") h.adapt.learning_rate = v.get<double>();
      else if (key == "adapt_steps") h.adapt.steps_per_observation = v.get<std::size_t>();
      else if (key == "adapt_batch_passes") h.adapt.batch_passes = v.get<std::size_t>();
      else if (key == "adapt_mode") h.adapt.mode = adapt_mode_from(v.get<std::string>());
      else if (key == "cart_depth") h.cart_depth = v.get<std::size_t>();
      else if (key == "clusters") h.clusters = v.get<std::size_t>();
      else if (key == "em_iterations") h.em_iterations = v.get<std::size_t>();
      else if (key == "calibrated") h.calibrated = v.get<bool>();
      else throw ConfigError("unknown hyperparameter: " + key);
    } catch (const Json::exception& e) {
      throw ConfigError("hyperparameter " + key + ": " + e.what());
    }
  }
}

// ------------------------------------------------------------------ config

std::size_t ExperimentConfig::schedule_count() const {
  if (schedules) return schedules;
  return domain == DomainTag::kLowDim ? 50 : 150;
}

Hyperparameters ExperimentConfig::resolved() const {
  auto h = default_hyperparameters(domain, model, multi_label);
  apply_overrides(h, hyperparameters);
  return h;
}

void ExperimentConfig::validate() const {
  if (domain == DomainTag::kGeneric) {
    throw ConfigError("domain must be lowdim or scheduling");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  const auto n = schedule_count();
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw ConfigError("schedules/train_fraction leave an empty train or test side");
  }
  if (multi_label) {
    if (domain != DomainTag::kScheduling) {
      throw ConfigError("multi_label requires the scheduling domain");
    }
    if (model != ModelKind::kPnn && model != ModelKind::kPddt &&
        model != ModelKind::kNn && model != ModelKind::kDdt) {
      throw ConfigError(std::string("multi_label is not supported for ") +
                        harness::to_string(model));
    }
  }
  const auto h = resolved();
  if (is_tree_model(model) && framing != Framing::kStandard && !h.calibrated) {
    throw ConfigError(std::string(harness::to_string(model)) + " with " +
                      pairwise::to_string(framing) +
                      " framing requires hyperparameters.calibrated = true");
  }
  if (is_personalized(model) && h.embedding_dim == 0) {
    throw ConfigError(std::string(harness::to_string(model)) +
                      " needs embedding_dim >= 1");
  }
  if (!is_personalized(model) && h.embedding_dim != 0) {
    throw ConfigError(std::string(harness::to_string(model)) +
                      " takes no embedding; embedding_dim must be 0");
  }
  if (h.hidden.empty() ||
      std::find(h.hidden.begin(), h.hidden.end(), 0u) != h.hidden.end()) {
    throw ConfigError("hidden layer sizes must be positive");
  }
  try {
    pnn::activation_from_string(h.activation);
    h.sgd.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (h.tree_depth < 1 || h.tree_depth > 12) throw ConfigError("tree_depth must be 1..12");
  if (!(h.adapt.learning_rate > 0.0)) throw ConfigError("adapt_learning_rate must be > 0");
  if (!(h.embedding_init_std >= 0.0)) throw ConfigError("embedding_init_std must be >= 0");
  if (h.cart_depth < 1) throw ConfigError("cart_depth must be >= 1");
  if (h.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (h.em_iterations < 1) throw ConfigError("em_iterations must be >= 1");
}

std::string ExperimentConfig::label() const {
  std::string s = std::string(harness::to_string(model)) + "/" + pairwise::to_string(framing);
  if (multi_label) s += "+multi";
  return s;
}

Json ExperimentConfig::to_json() const {
  return {{"domain", dataset::to_string(domain)},
          {"model", harness::to_string(model)},
          {"framing", pairwise::to_string(framing)},
          {"multi_label", multi_label},
          {"seeds", seeds},
          {"schedules", schedules},
          {"train_fraction", train_fraction},
          {"crispify", crispify},
          {"hyperparameters", hyperparameters},
          {"output_dir", output_dir}};
}

std::uint64_t ExperimentConfig::fingerprint() const {
  auto j = to_json();
  j.erase("output_dir");
  j["hyperparameters"] = resolved().to_json();
  j["schedules"] = schedule_count();
  return fnv1a(j.dump());
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  static const std::set<std::string> kKeys = {
      "domain", "model", "framing", "multi_label", "seeds", "schedules",
      "train_fraction", "crispify", "hyperparameters", "output_dir"};
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key: " + key);
  }
  try {
    if (j.contains("domain")) {
      c.domain = dataset::domain_from_string(j.at("domain").get<std::string>());
    }
    if (j.contains("model")) c.model = model_from_string(j.at("model").get<std::string>());
    if (j.contains("framing")) {
      c.framing = pairwise::framing_from_string(j.at("framing").get<std::string>());
    }
    if (j.contains("multi_label")) c.multi_label = j.at("multi_label").get<bool>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("schedules")) c.schedules = j.at("schedules").get<std::size_t>();
    if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("crispify")) c.crispify = j.at("crispify").get<bool>();
    if (j.contains("hyperparameters")) c.hyperparameters = j.at("hyperparameters");
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

dataset::DemonstrationSet generate_dataset(DomainTag domain, std::size_t schedules,
                                           std::uint64_t seed, bool multi_label) {
  if (domain == DomainTag::kLowDim) {
    envs::LowDimConfig c;
    c.schedule_count = schedules;
    c.seed = seed;
    return envs::generate_lowdim(c);
  }
  if (domain == DomainTag::kScheduling) {
    return envs::generate_scheduling(schedules, envs::BetaSampler{}, seed, {},
                                     multi_label);
  }
  throw ConfigError("cannot generate data for the generic domain");
}

// ----------------------------------------------------------- trained model

TrainedModel train_model(const ExperimentConfig& config,
                         const dataset::DemonstrationSet& train, std::uint64_t seed) {
  const auto h = config.resolved();
  pnn::TrainOptions options;
  options.sgd = h.sgd;
  options.sgd.seed = seed;
  options.embedding_init_std = h.embedding_init_std;
  const auto labels =
      config.multi_label ? pairwise::LabelMode::kMulti : pairwise::LabelMode::kSingle;
  const pnn::NetworkConfig network{h.hidden, h.activation};
  baselines::CartConfig cart;
  cart.max_depth = h.cart_depth;

  TrainedModel t;
  t.kind = config.model;
  t.adapt = h.adapt;
  switch (config.model) {
    case ModelKind::kPnn:
    case ModelKind::kNn: {
      auto m = pnn::make_pnn(train, config.framing, h.embedding_dim, network, seed, labels);
      t.train_loss = pnn::train(m, train, options).epoch_loss;
      t.network = std::move(m);
      break;
    }
    case ModelKind::kPddt:
    case ModelKind::kDdt: {
      auto m = pddt::make_pddt(train, config.framing, h.embedding_dim,
                               pddt::PddtConfig{h.tree_depth}, seed, labels);
      t.train_loss = pnn::train(m, train, options).epoch_loss;
      if (config.crispify) t.crisp = pddt::crispify(m);
      t.network = std::move(m);
      break;
    }
    case ModelKind::kDt:
      t.tree = baselines::fit_plain_dt(train, config.framing, cart);
      break;
    case ModelKind::kKMeansNn:
    case ModelKind::kGmmNn: {
      baselines::ClusterConfig c;
      c.method = config.model == ModelKind::kKMeansNn ? baselines::ClusterMethod::kKMeans
                                                      : baselines::ClusterMethod::kGmm;
      c.k = h.clusters;
      c.framing = config.framing;
      c.network = network;
      c.train = options;
      c.seed = seed;
      t.clustered = baselines::fit_clustered(train, c);
      break;
    }
    case ModelKind::kEmDt: {
      baselines::EmDtConfig c;
      c.iterations = h.em_iterations;
      c.framing = config.framing;
      c.cart = cart;
      c.seed = seed;
      t.em = baselines::fit_em_dt(train, c);
      break;
    }
    case ModelKind::kDtPnnEmb: {
      auto m = pnn::make_pnn(train, Framing::kPairwise, h.embedding_dim, network, seed);
      t.train_loss = pnn::train(m, train, options).epoch_loss;
      t.tree = baselines::fit_dt_on_pnn_embeddings(m, train, cart, config.framing);
      t.network = std::move(m);
      break;
    }
  }
  return t;
}

std::unique_ptr<pnn::OnlinePolicy> TrainedModel::policy() const {
  switch (kind) {
    case ModelKind::kPnn:
    case ModelKind::kNn:
    case ModelKind::kPddt:
    case ModelKind::kDdt:
      return std::make_unique<pnn::PersonalizedPolicy>(network.value(), adapt);
    case ModelKind::kDt:
      return std::make_unique<baselines::DtPolicy>(tree.value());
    case ModelKind::kKMeansNn:
    case ModelKind::kGmmNn:
      return std::make_unique<baselines::ClusteredPolicy>(clustered.value());
    case ModelKind::kEmDt:
      return std::make_unique<baselines::EmDtPolicy>(em.value());
    case ModelKind::kDtPnnEmb:
      return std::make_unique<baselines::DtOnPnnPolicy>(network.value(), tree.value(),
                                                        adapt);
  }
  throw std::logic_error("policy: unknown model kind");
}

std::unique_ptr<pnn::OnlinePolicy> TrainedModel::crisp_policy() const {
  if (!crisp || !network) return nullptr;
  return std::make_unique<pddt::CrispPolicy>(*network, *crisp, adapt);
}

Json TrainedModel::to_json() const {
  Json j = {{"format", "apprentice-trained v1"},
            {"kind", harness::to_string(kind)},
            {"adapt", adapt_json(adapt)},
            {"train_loss", train_loss}};
  if (network) j["network"] = network->to_json();
  if (crisp) j["crisp"] = crisp->to_json();
  if (tree) j["tree"] = tree->to_json();
  if (clustered) j["clustered"] = clustered->to_json();
  if (em) j["em"] = em->to_json();
  return j;
}

TrainedModel TrainedModel::from_json(const Json& j) {
  if (j.value("format", std::string{}) != "apprentice-trained v1") {
    throw std::invalid_argument("trained model: unsupported format");
  }
  TrainedModel t;
  t.kind = model_from_string(j.at("kind").get<std::string>());
  t.adapt = adapt_from_json(j.at("adapt"));
  t.train_loss = j.at("train_loss").get<std::vector<double>>();
  if (j.contains("network")) t.network = pnn::model_from_json(j["network"], pddt::load_any_core);
  if (j.contains("crisp")) t.crisp = pddt::CrispTree::from_json(j["crisp"]);
  if (j.contains("tree")) t.tree = baselines::DtModel::from_json(j["tree"]);
  if (j.contains("clustered")) t.clustered = baselines::ClusteredModel::from_json(j["clustered"]);
  if (j.contains("em")) t.em = baselines::EmDtModel::from_json(j["em"]);
  const bool ok = [&] {
    switch (t.kind) {
      case ModelKind::kPnn:
      case ModelKind::kNn:
      case ModelKind::kPddt:
      case ModelKind::kDdt: return t.network.has_value();
      case ModelKind::kDt: return t.tree.has_value();
      case ModelKind::kKMeansNn:
      case ModelKind::kGmmNn: return t.clustered.has_value();
      case ModelKind::kEmDt: return t.em.has_value();
      case ModelKind::kDtPnnEmb: return t.network.has_value() && t.tree.has_value();
    }
    return false;
  }();
  if (!ok) throw std::invalid_argument("trained model: missing component for its kind");
  return t;
}

void save_trained(const TrainedModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model.to_json().dump() << '\n';
}

TrainedModel load_trained(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Json j;
  in >> j;
  return TrainedModel::from_json(j);
}

// ----------------------------------------------------------------- reports

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.n - 1));
  }
  return s;
}

namespace {

template <class F>
Summary summarize_by(const std::vector<SeedResult>& seeds, F field, bool crisp_only) {
  std::vector<double> v;
  for (const auto& s : seeds) {
    if (!crisp_only || s.has_crisp) v.push_back(field(s));
  }
  return summarize(v);
}

Json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"n", s.n}};
}

Json seed_json(const SeedResult& s) {
  Json conf = Json::array();
  for (const auto& [k, n] : s.confusion) conf.push_back({k.first, k.second, n});
  Json j = {{"seed", s.seed},
            {"accuracy", s.accuracy},
            {"prequential_accuracy", s.prequential_accuracy},
            {"mean_loss", s.mean_loss},
            {"mean_head_loss", s.mean_head_loss},
            {"test_timesteps", s.test_timesteps},
            {"degenerate_predictions", s.degenerate_predictions},
            {"confusion", conf},
            {"dataset_fingerprint", s.dataset_fingerprint},
            {"wall_seconds", s.wall_seconds},
            {"details", s.details}};
  if (s.has_crisp) {
    j["crisp_accuracy"] = s.crisp_accuracy;
    j["crisp_prequential_accuracy"] = s.crisp_prequential_accuracy;
    j["crisp_head_loss"] = s.crisp_head_loss;
  }
  return j;
}

SeedResult seed_from_json(const Json& j) {
  SeedResult s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.accuracy = j.at("accuracy").get<double>();
  s.prequential_accuracy = j.at("prequential_accuracy").get<double>();
  s.mean_loss = j.at("mean_loss").get<double>();
  s.mean_head_loss = j.at("mean_head_loss").get<double>();
  s.test_timesteps = j.at("test_timesteps").get<std::size_t>();
  s.degenerate_predictions = j.at("degenerate_predictions").get<std::size_t>();
  for (const auto& c : j.at("confusion")) {
    s.confusion[{c.at(0).get<int>(), c.at(1).get<int>()}] = c.at(2).get<std::size_t>();
  }
  s.dataset_fingerprint = j.at("dataset_fingerprint").get<std::uint64_t>();
  s.wall_seconds = j.at("wall_seconds").get<double>();
  s.details = j.at("details");
  if (j.contains("crisp_accuracy")) {
    s.has_crisp = true;
    s.crisp_accuracy = j.at("crisp_accuracy").get<double>();
    s.crisp_prequential_accuracy = j.at("crisp_prequential_accuracy").get<double>();
    s.crisp_head_loss = j.at("crisp_head_loss").get<double>();
  }
  return s;
}

}  // namespace

Summary MetricsReport::accuracy() const {
  return summarize_by(seeds, [](const SeedResult& s) { return s.accuracy; }, false);
}
Summary MetricsReport::crisp_accuracy() const {
  return summarize_by(seeds, [](const SeedResult& s) { return s.crisp_accuracy; }, true);
}
Summary MetricsReport::head_loss() const {
  return summarize_by(seeds, [](const SeedResult& s) { return s.mean_head_loss; }, false);
}
Summary MetricsReport::crisp_head_loss() const {
  return summarize_by(seeds, [](const SeedResult& s) { return s.crisp_head_loss; }, true);
}

std::uint64_t MetricsReport::dataset_fingerprint() const {
  std::string s;
  for (const auto& r : seeds) {
    s += std::to_string(r.seed) + ":" + std::to_string(r.dataset_fingerprint) + ";";
  }
  return fnv1a(s);
}

Json MetricsReport::to_json() const {
  Json js = Json::array();
  for (const auto& s : seeds) js.push_back(seed_json(s));
  Json j = {{"format", "apprentice-report v1"},
            {"config", config},
            {"label", label},
            {"version", version},
            {"config_fingerprint", config_fingerprint},
            {"dataset_fingerprint", dataset_fingerprint()},
            {"seeds", js},
            {"accuracy", summary_json(accuracy())},
            {"head_loss", summary_json(head_loss())},
            {"failed", failed},
            {"error", error},
            {"wall_seconds", wall_seconds}};
  if (std::any_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.has_crisp; })) {
    j["crisp_accuracy"] = summary_json(crisp_accuracy());
    j["crisp_head_loss"] = summary_json(crisp_head_loss());
  }
  return j;
}

MetricsReport MetricsReport::from_json(const Json& j) {
  if (j.value("format", std::string{}) != "apprentice-report v1") {
    throw std::invalid_argument("report: unsupported format");
  }
  MetricsReport r;
  r.config = j.at("config");
  r.label = j.at("label").get<std::string>();
  r.version = j.at("version").get<std::string>();
  r.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
  for (const auto& s : j.at("seeds")) r.seeds.push_back(seed_from_json(s));
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

MetricsReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Json j;
  in >> j;
  return MetricsReport::from_json(j);
}

// --------------------------------------------------------------------- run

MetricsReport run(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const auto t_run = std::chrono::steady_clock::now();
  MetricsReport report;
  report.config = config.to_json();
  report.label = config.label();
  report.version = version_string();
  report.config_fingerprint = config.fingerprint();
  const std::filesystem::path out_dir = config.output_dir;

  for (auto seed : config.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto data = generate_dataset(config.domain, config.schedule_count(), seed,
                                         config.multi_label);
      const auto [train, test] = dataset::split(data, config.train_fraction, seed);
      const auto trained = train_model(config, train, seed);

      SeedResult s;
      s.seed = seed;
      s.dataset_fingerprint = dataset::fingerprint(data);
      auto policy = trained.policy();
      const auto r = pnn::evaluate_online(*policy, test);
      s.accuracy = r.accuracy();
      s.prequential_accuracy = r.prequential_accuracy();
      s.mean_loss = r.mean_loss;
      s.mean_head_loss = r.mean_head_loss;
      s.test_timesteps = r.total;
      s.degenerate_predictions = r.degenerate_predictions;
      s.confusion = r.confusion;
      if (auto cp = trained.crisp_policy()) {
        const auto rc = pnn::evaluate_online(*cp, test);
        s.has_crisp = true;
        s.crisp_accuracy = rc.accuracy();
        s.crisp_prequential_accuracy = rc.prequential_accuracy();
        s.crisp_head_loss = rc.mean_head_loss;
      }
      if (!trained.train_loss.empty()) s.details["final_train_loss"] = trained.train_loss.back();
      if (trained.kind == ModelKind::kDtPnnEmb) {
        pnn::PersonalizedPolicy p(*trained.network, trained.adapt);
        s.details["pnn_accuracy"] = pnn::evaluate_online(p, test).accuracy();
      }
      if (trained.em) {
        s.details["em_iterations"] = trained.em->iterations_run;
        s.details["em_converged"] = trained.em->converged;
      }
      if (trained.clustered) {
        s.details["clusters"] = trained.clustered->members.size();
        s.details["dropped_clusters"] = trained.clustered->dropped_clusters;
        if (log && trained.clustered->dropped_clusters) {
          *log << "[" << report.label << "] seed " << seed << ": dropped "
               << trained.clustered->dropped_clusters << " empty cluster(s)\n";
        }
      }
      if (trained.crisp) {
        s.details["style_nodes"] = trained.crisp->style_node_count();
      }
      if (!config.output_dir.empty()) {
        const auto dir = out_dir / seed_dir_name(seed);
        save_trained(trained, dir / "model.json");
        dataset::save(test, dir / "test.dataset");
        if (trained.crisp) {
          std::ofstream(dir / "tree.txt")
              << pddt::export_tree(*trained.crisp, pddt::TreeFormat::kText);
        }
      }
      s.wall_seconds = seconds_since(t0);
      if (log) {
        *log << "[" << report.label << "] " << dataset::to_string(config.domain) << " seed "
             << seed << ": accuracy " << std::fixed << std::setprecision(4) << s.accuracy;
        if (s.has_crisp) *log << " crisp " << s.crisp_accuracy;
        *log << " (" << std::setprecision(1) << s.wall_seconds << "s)\n";
        log->unsetf(std::ios::floatfield);
      }
      report.seeds.push_back(std::move(s));
    } catch (const std::exception& e) {
      report.failed = true;
      report.error = "seed " + std::to_string(seed) + ": " + e.what();
      if (log) *log << "[" << report.label << "] " << report.error << '\n';
      break;
    }
  }
  report.wall_seconds = seconds_since(t_run);
  if (!config.output_dir.empty()) write_report(report, out_dir / "report.json");
  return report;
}

// ----------------------------------------------------------------- compare

Comparison compare(const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) throw CompareError("compare needs at least two reports");
  for (const auto& r : reports) {
    if (r.failed || r.seeds.empty()) {
      throw CompareError("report " + r.label + " did not complete");
    }
    if (r.dataset_fingerprint() != reports.front().dataset_fingerprint()) {
      throw CompareError("report " + r.label + " was run on different datasets than " +
                         reports.front().label);
    }
  }
  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reports[a].accuracy().mean > reports[b].accuracy().mean;
  });
  Comparison c;
  for (auto i : order) c.rows.push_back({reports[i].label, reports[i].accuracy()});
  const std::size_t n = order.size();
  c.mean_difference.assign(n, std::vector<double>(n, 0.0));
  c.wins.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c.mean_difference[i][j] = c.rows[i].accuracy.mean - c.rows[j].accuracy.mean;
      const auto& a = reports[order[i]].seeds;
      const auto& b = reports[order[j]].seeds;
      for (const auto& sa : a) {
        for (const auto& sb : b) {
          if (sa.seed == sb.seed && sa.accuracy > sb.accuracy) ++c.wins[i][j];
        }
      }
    }
  }
  return c;
}

std::string Comparison::render() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "rank  model                      accuracy (mean +- sd)\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << std::setw(4) << i + 1 << "  " << std::left << std::setw(26) << rows[i].label
       << std::right << std::setw(7) << 100.0 * rows[i].accuracy.mean << " +- "
       << 100.0 * rows[i].accuracy.stddev << "  (n=" << rows[i].accuracy.n << ")\n";
  }
  os << "\npairwise differences (row - column, accuracy points; seed wins)\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i == j) continue;
      os << "  " << rows[i].label << " vs " << rows[j].label << ": " << std::showpos
         << 100.0 * mean_difference[i][j] << std::noshowpos << " pts, " << wins[i][j]
         << "/" << rows[i].accuracy.n << " wins\n";
    }
  }
  return os.str();
}

// --------------------------------------------------------------- plot data

void emit_plot_data(const std::vector<MetricsReport>& reports, std::ostream& out) {
  out << kPlotHeader << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    std::string domain = r.config.value("domain", std::string{});
    if (r.config.value("multi_label", false)) domain += "-multi";
    const auto model = r.config.value("model", std::string{});
    const auto framing = r.config.value("framing", std::string{});
    for (const auto& s : r.seeds) {
      out << domain << ',' << model << ',' << framing << ',' << s.seed << ','
          << num(s.accuracy) << ',' << num(s.prequential_accuracy) << ','
          << num(s.mean_loss) << ',' << num(s.mean_head_loss) << ','
          << (s.has_crisp ? num(s.crisp_accuracy) : std::string{}) << '\n';
    }
  }
}

std::vector<PlotRow> read_plot_data(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kPlotHeader) {
    throw std::runtime_error("plot data: unexpected header");
  }
  std::vector<PlotRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) {
      throw std::runtime_error("plot data: line " + std::to_string(lineno) +
                               " has " + std::to_string(f.size()) + " fields");
    }
    try {
      PlotRow r;
      r.domain = f[0];
      r.model = f[1];
      r.framing = f[2];
      r.seed = std::stoull(f[3]);
      r.accuracy = std::stod(f[4]);
      r.prequential_accuracy = std::stod(f[5]);
      r.loss = std::stod(f[6]);
      r.head_loss = std::stod(f[7]);
      if (!f[8].empty()) r.crisp_accuracy = std::stod(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("plot data: bad number on line " + std::to_string(lineno));
    }
  }
  return rows;
}

// --------------------------------------------------------------- reproduce

std::vector<ExperimentConfig> reproduction_suite(const ReproduceOptions& options) {
  std::vector<ExperimentConfig> out;
  for (auto domain : options.domains) {
    auto add = [&](ModelKind m, Framing f, bool multi = false) {
      ExperimentConfig c;
      c.domain = domain;
      c.model = m;
      c.framing = f;
      c.multi_label = multi;
      c.seeds = options.seeds;
      if (is_tree_model(m) && f != Framing::kStandard) {
        c.hyperparameters["calibrated"] = true;
      }
      if (!options.output_root.empty()) {
        std::string name = c.label();
        std::replace(name.begin(), name.end(), '/', '_');
        c.output_dir = (options.output_root / dataset::to_string(domain) / name).string();
      }
      out.push_back(std::move(c));
    };
    add(ModelKind::kPnn, Framing::kPairwise);
    add(ModelKind::kPddt, Framing::kPairwise);
    add(ModelKind::kNn, Framing::kPairwise);
    add(ModelKind::kDdt, Framing::kPairwise);
    add(ModelKind::kDt, Framing::kPairwise);
    add(ModelKind::kKMeansNn, Framing::kPairwise);
    add(ModelKind::kGmmNn, Framing::kPairwise);
    add(ModelKind::kEmDt, Framing::kPairwise);
    add(ModelKind::kDtPnnEmb, Framing::kStandard);
    if (domain == DomainTag::kScheduling) {
      add(ModelKind::kPnn, Framing::kStandard);
      if (options.multi_label) add(ModelKind::kPddt, Framing::kPairwise, true);
    }
  }
  return out;
}

std::vector<MetricsReport> reproduce(const ReproduceOptions& options, std::ostream* log) {
  std::vector<MetricsReport> reports;
  for (const auto& c : reproduction_suite(options)) reports.push_back(run(c, log));
  if (options.output_root.empty()) return reports;

  std::filesystem::create_directories(options.output_root);
  {
    std::ofstream out(options.output_root / "plot_data.csv");
    emit_plot_data(reports, out);
  }
  {
    std::ofstream out(options.output_root / "table1.csv");
    out << "domain,entry,mean,stddev,n\n";
    for (const auto& r : reports) {
      const auto domain = r.config.value("domain", std::string{});
      const auto model = r.config.value("model", std::string{});
      auto row = [&](const std::string& entry, const Summary& s) {
        out << domain << ',' << entry << ',' << s.mean << ',' << s.stddev << ',' << s.n
            << '\n';
      };
      if (r.config.value("multi_label", false)) {
        row("pddt-multi-head-loss", r.head_loss());
        row("discrete-pddt-multi-head-loss", r.crisp_head_loss());
        continue;
      }
      if (r.config.value("framing", std::string{}) != "pairwise" && model != "dt-pnn-emb") {
        continue;
      }
      if (model == "pnn") row("pnn", r.accuracy());
      if (model == "pddt") {
        row("pddt", r.accuracy());
        row("discrete-pddt", r.crisp_accuracy());
      }
      if (model == "dt-pnn-emb") row("dt-pnn-emb", r.accuracy());
    }
  }
  for (auto domain : options.domains) {
    std::vector<MetricsReport> same;
    for (const auto& r : reports) {
      if (!r.failed && r.config.value("domain", std::string{}) == dataset::to_string(domain) &&
          !r.config.value("multi_label", false)) {
        same.push_back(r);
      }
    }
    if (same.size() < 2) continue;
    std::ofstream out(options.output_root /
                      (std::string("comparison_") + dataset::to_string(domain) + ".txt"));
    out << compare(same).render();
  }
  return reports;
}

std::string version_string() { return APPRENTICE_VERSION; }

}  // namespace apprentice::harness
