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

// apprentice: command-line front end for data generation, training,
// evaluation, tree extraction and result comparison.
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "apprentice/harness/harness.hpp"

namespace fs = std::filesystem;
using namespace apprentice;
using Json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

fs::path output_root() {
  const char* env = std::getenv("APPRENTICE_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

dataset::DomainTag parse_domain(const std::string& name) {
  if (name != "lowdim" && name != "scheduling") {
    throw harness::ConfigError("domain must be lowdim or scheduling, got " + name);
  }
  return dataset::domain_from_string(name);
}

/// "0.1" -> number, "[16,16]" -> array, "true" -> bool, anything else -> string.
Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception&) {
    return text;
  }
}

struct ConfigFlags {
  std::string config_file;
  std::string domain;
  std::string model;
  std::string framing;
  std::vector<std::uint64_t> seeds;
  std::size_t schedules = 0;
  bool multi_label = false;
  bool no_crispify = false;
  std::vector<std::string> sets;
  std::string output;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON experiment config");
    app->add_option("--domain", domain, "lowdim | scheduling");
    app->add_option("--model", model,
                    "pnn | pddt | nn | ddt | dt | kmeans-nn | gmm-nn | em-dt | dt-pnn-emb");
    app->add_option("--framing", framing, "pairwise | pointwise | standard");
    app->add_option("--seeds", seeds, "seed list")->delimiter(',');
    app->add_option("--schedules", schedules, "schedules to generate");
    app->add_flag("--multi-label", multi_label, "multi-label scheduling variant");
    app->add_flag("--no-crispify", no_crispify, "skip crisp-tree metrics");
    app->add_option("--set", sets, "hyperparameter override key=value (repeatable)");
    app->add_option("-o,--output", output, "output directory");
  }

  harness::ExperimentConfig build() const {
    Json j = Json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw harness::ConfigError("cannot open config " + config_file);
      try {
        in >> j;
      } catch (const Json::exception& e) {
        throw harness::ConfigError("config " + config_file + ": " + e.what());
      }
    }
    if (!domain.empty()) j["domain"] = domain;
    if (!model.empty()) j["model"] = model;
    if (!framing.empty()) j["framing"] = framing;
    if (!seeds.empty()) j["seeds"] = seeds;
    if (schedules) j["schedules"] = schedules;
    if (multi_label) j["multi_label"] = true;
    if (no_crispify) j["crispify"] = false;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw harness::ConfigError("--set expects key=value, got " + kv);
      }
      j["hyperparameters"][kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    auto c = harness::ExperimentConfig::from_json(j);
    if (!output.empty()) {
      c.output_dir = output;
    } else if (c.output_dir.empty()) {
      std::string name = c.label();
      std::replace(name.begin(), name.end(), '/', '_');
      c.output_dir = (output_root() / dataset::to_string(c.domain) / name).string();
    }
    return c;
  }
};

void print_summary(const harness::MetricsReport& r) {
  const auto a = r.accuracy();
  std::cout << r.label << ": accuracy " << 100.0 * a.mean << " +- " << 100.0 * a.stddev
            << " over " << a.n << " seed(s)";
  if (r.to_json().contains("crisp_accuracy")) {
    const auto c = r.crisp_accuracy();
    std::cout << ", crisp " << 100.0 * c.mean << " +- " << 100.0 * c.stddev;
  }
  std::cout << '\n';
  if (r.failed) std::cerr << "run failed: " << r.error << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized apprenticeship learning toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a demonstration dataset");
  std::string gen_domain = "lowdim";
  std::uint64_t gen_seed = 1;
  std::size_t gen_schedules = 0;
  bool gen_multi = false;
  std::string gen_out;
  gen->add_option("--domain", gen_domain, "lowdim | scheduling");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--schedules", gen_schedules, "0 = domain default");
  gen->add_flag("--multi-label", gen_multi);
  gen->add_option("-o,--output", gen_out, "dataset file");

  // train
  auto* train = app.add_subcommand("train", "train and evaluate every seed of a config");
  ConfigFlags train_flags;
  train_flags.add_to(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint on a dataset");
  std::string eval_model, eval_data;
  eval->add_option("--model", eval_model, "model.json written by train")->required();
  eval->add_option("--data", eval_data, "dataset file")->required();

  // crispify
  auto* crisp = app.add_subcommand("crispify", "extract the crisp tree of a PDDT");
  std::string crisp_model, crisp_out;
  crisp->add_option("--model", crisp_model, "model.json written by train")->required();
  crisp->add_option("-o,--output", crisp_out, "crisp tree file (default: stdout)");

  // export-tree
  auto* exp = app.add_subcommand("export-tree", "render a crisp tree as text or dot");
  std::string exp_tree, exp_format = "text", exp_out;
  exp->add_option("--tree", exp_tree, "crisp tree file")->required();
  exp->add_option("--format", exp_format, "text | dot");
  exp->add_option("-o,--output", exp_out, "output file (default: stdout)");

  // compare
  auto* cmp = app.add_subcommand("compare", "rank completed runs on the same datasets");
  std::vector<std::string> cmp_reports;
  std::string cmp_plot;
  cmp->add_option("reports", cmp_reports, "report.json files")->required();
  cmp->add_option("--plot-data", cmp_plot, "also write per-seed CSV here");

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "run the full comparison suite");
  std::vector<std::string> rep_domains;
  std::vector<std::uint64_t> rep_seeds;
  std::string rep_out;
  bool rep_no_multi = false;
  rep->add_option("--domain", rep_domains, "restrict to these domains");
  rep->add_option("--seeds", rep_seeds, "seed list")->delimiter(',');
  rep->add_option("-o,--output", rep_out, "output root (default: $APPRENTICE_OUTPUT_ROOT/reproduce)");
  rep->add_flag("--no-multi-label", rep_no_multi, "skip the multi-label variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) {
      const auto domain = parse_domain(gen_domain);
      const auto n = gen_schedules ? gen_schedules
                                   : (domain == dataset::DomainTag::kLowDim ? 50 : 150);
      const auto set = harness::generate_dataset(domain, n, gen_seed, gen_multi);
      const fs::path out = gen_out.empty()
                               ? output_root() / "data" /
                                     (gen_domain + "_seed" + std::to_string(gen_seed) +
                                      ".dataset")
                               : fs::path(gen_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      dataset::save(set, out);
      std::cout << out.string() << ": " << set.schedules.size() << " schedules, "
                << set.observation_count() << " observations\n";
      return kOk;
    }
    if (train->parsed()) {
      const auto config = train_flags.build();
      const auto report = harness::run(config, &std::cerr);
      print_summary(report);
      std::cout << "report: " << (fs::path(config.output_dir) / "report.json").string()
                << '\n';
      return report.failed ? kRunFailure : kOk;
    }
    if (eval->parsed()) {
      const auto model = harness::load_trained(eval_model);
      const auto data = dataset::load(eval_data);
      auto policy = model.policy();
      const auto r = pnn::evaluate_online(*policy, data);
      Json out = {{"accuracy", r.accuracy()},
                  {"prequential_accuracy", r.prequential_accuracy()},
                  {"mean_loss", r.mean_loss},
                  {"mean_head_loss", r.mean_head_loss},
                  {"timesteps", r.total}};
      if (auto cp = model.crisp_policy()) {
        const auto rc = pnn::evaluate_online(*cp, data);
        out["crisp_accuracy"] = rc.accuracy();
        out["crisp_head_loss"] = rc.mean_head_loss;
      }
      std::cout << out.dump(2) << '\n';
      return kOk;
    }
    if (crisp->parsed()) {
      const auto model = harness::load_trained(crisp_model);
      if (!model.network) throw harness::ConfigError("checkpoint has no PDDT network");
      const auto tree = pddt::crispify(*model.network);
      const auto text = tree.to_json().dump(2);
      if (crisp_out.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream(crisp_out) << text << '\n';
      }
      return kOk;
    }
    if (exp->parsed()) {
      std::ifstream in(exp_tree);
      if (!in) throw std::runtime_error("cannot open " + exp_tree);
      Json j;
      in >> j;
      const auto tree = pddt::CrispTree::from_json(j);
      const auto text = pddt::export_tree(tree, pddt::tree_format_from_string(exp_format));
      if (exp_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(exp_out) << text;
      }
      return kOk;
    }
    if (cmp->parsed()) {
      std::vector<harness::MetricsReport> reports;
      for (const auto& p : cmp_reports) reports.push_back(harness::read_report(p));
      std::cout << harness::compare(reports).render();
      if (!cmp_plot.empty()) {
        std::ofstream out(cmp_plot);
        harness::emit_plot_data(reports, out);
      }
      return kOk;
    }
    if (rep->parsed()) {
      harness::ReproduceOptions o;
      if (!rep_domains.empty()) {
        o.domains.clear();
        for (const auto& d : rep_domains) o.domains.push_back(parse_domain(d));
      }
      if (!rep_seeds.empty()) o.seeds = rep_seeds;
      o.multi_label = !rep_no_multi;
      o.output_root = rep_out.empty() ? output_root() / "reproduce" : fs::path(rep_out);
      for (const auto& c : harness::reproduction_suite(o)) c.validate();
      const auto reports = harness::reproduce(o, &std::cerr);
      bool failed = false;
      for (const auto& r : reports) {
        print_summary(r);
        failed = failed || r.failed;
      }
      std::cout << "outputs: " << o.output_root.string() << '\n';
      return failed ? kRunFailure : kOk;
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const dataset::DatasetError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kConfigError;
}
