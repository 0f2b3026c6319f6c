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

#include "apprentice/pddt/pddt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "apprentice/diffcore/loss.hpp"
#include "apprentice/diffcore/rng.hpp"
#include "apprentice/pnn/mlp.hpp"

namespace apprentice::pddt {

namespace {
// alpha = exp(kAlphaRate * theta): steepness moves ten times slower than the
// other parameters under a shared learning rate.
constexpr double kAlphaRate = 0.1;
}  // namespace

PddtCore::PddtCore(std::size_t input_width, std::size_t output_width,
                   std::size_t depth, std::uint64_t seed)
    : width_(input_width), outputs_(output_width), depth_(depth) {
  if (input_width == 0 || output_width == 0) {
    throw std::invalid_argument("pddt: zero input or output width");
  }
  if (depth == 0 || depth > 12) {
    throw std::invalid_argument("pddt: depth must be in [1, 12]");
  }
  nodes_ = (std::size_t{1} << depth) - 1;
  params_ = diffcore::ParameterBlock(leaf_offset() + leaf_count() * outputs_);

  Rng rng(seed);
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> comparison(0.0, 0.5);
  std::normal_distribution<double> importance(0.0, 0.1);
  std::normal_distribution<double> leaf(0.0, 0.1);
  for (std::size_t i = 0; i < nodes_; ++i) {
    double* p = params_.value.data() + i * node_stride();
    for (std::size_t k = 0; k < width_; ++k) {
      p[k] = sign(rng) ? magnitude(rng) : -magnitude(rng);
      p[width_ + k] = comparison(rng);
      p[2 * width_ + k] = importance(rng);
    }
    p[3 * width_] = 0.0;  // log alpha
  }
  for (std::size_t i = leaf_offset(); i < params_.size(); ++i) {
    params_.value[i] = leaf(rng);
  }
}

std::size_t PddtCore::workspace_size() const {
  // scaled input | pre-activations | D | selected feature | reach (heap order)
  return width_ + 3 * nodes_ + 2 * nodes_ + 1;
}

std::size_t PddtCore::selected_feature(std::size_t node) const {
  const double* s = params_.value.data() + node * node_stride() + 2 * width_;
  return static_cast<std::size_t>(std::max_element(s, s + width_) - s);
}

double PddtCore::weight(std::size_t node, std::size_t feature) const {
  return params_.value.at(node * node_stride() + feature);
}

double PddtCore::comparison(std::size_t node, std::size_t feature) const {
  return params_.value.at(node * node_stride() + width_ + feature);
}

double PddtCore::importance(std::size_t node, std::size_t feature) const {
  return params_.value.at(node * node_stride() + 2 * width_ + feature);
}

double PddtCore::alpha(std::size_t node) const {
  if (alpha_override_) return *alpha_override_;
  return std::exp(kAlphaRate * params_.value.at(node * node_stride() + 3 * width_));
}

std::span<const double> PddtCore::leaf(std::size_t leaf) const {
  if (leaf >= leaf_count()) throw std::out_of_range("pddt: leaf index");
  return {params_.value.data() + leaf_offset() + leaf * outputs_, outputs_};
}

void PddtCore::set_node(std::size_t node, std::span<const double> weights,
                        std::span<const double> comparisons,
                        std::span<const double> importances, double alpha) {
  if (node >= nodes_) throw std::out_of_range("pddt: node index");
  if (weights.size() != width_ || comparisons.size() != width_ ||
      importances.size() != width_) {
    throw std::invalid_argument("pddt: node vector width mismatch");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("pddt: alpha must be > 0");
  double* p = params_.value.data() + node * node_stride();
  std::copy(weights.begin(), weights.end(), p);
  std::copy(comparisons.begin(), comparisons.end(), p + width_);
  std::copy(importances.begin(), importances.end(), p + 2 * width_);
  p[3 * width_] = std::log(alpha) / kAlphaRate;
}

void PddtCore::set_leaf(std::size_t leaf, std::span<const double> values) {
  if (leaf >= leaf_count()) throw std::out_of_range("pddt: leaf index");
  if (values.size() != outputs_) {
    throw std::invalid_argument("pddt: leaf width mismatch");
  }
  std::copy(values.begin(), values.end(),
            params_.value.begin() +
                static_cast<std::ptrdiff_t>(leaf_offset() + leaf * outputs_));
}

void PddtCore::set_alpha_override(std::optional<double> alpha) {
  if (alpha && !(*alpha > 0.0)) {
    throw std::invalid_argument("pddt: alpha override must be > 0");
  }
  alpha_override_ = alpha;
}

void PddtCore::forward(std::span<const double> input, std::span<double> logits,
                       std::span<double> workspace) const {
  if (input.size() != width_ || logits.size() != outputs_ ||
      workspace.size() < workspace_size()) {
    throw std::invalid_argument("pddt: forward buffer width mismatch");
  }
  double* x = workspace.data();
  double* pre = x + width_;
  double* d = pre + nodes_;
  double* sel = d + nodes_;
  double* reach = sel + nodes_;
  scaler_.apply(input, {x, width_});
  reach[0] = 1.0;
  for (std::size_t i = 0; i < nodes_; ++i) {
    const std::size_t j = selected_feature(i);
    const double* p = params_.value.data() + i * node_stride();
    pre[i] = alpha(i) * (p[j] * x[j] - p[width_ + j]);
    d[i] = diffcore::sigmoid(pre[i]);
    sel[i] = static_cast<double>(j);
    reach[2 * i + 1] = reach[i] * d[i];
    reach[2 * i + 2] = reach[i] * (1.0 - d[i]);
  }
  std::fill(logits.begin(), logits.end(), 0.0);
  const double* leaves = params_.value.data() + leaf_offset();
  for (std::size_t l = 0; l < leaf_count(); ++l) {
    const double r = reach[nodes_ + l];
    for (std::size_t k = 0; k < outputs_; ++k) {
      logits[k] += r * leaves[l * outputs_ + k];
    }
  }
}

std::vector<double> PddtCore::path_probabilities(
    std::span<const double> input) const {
  std::vector<double> ws(workspace_size());
  std::vector<double> logits(outputs_);
  forward(input, logits, ws);
  const double* reach = ws.data() + width_ + 3 * nodes_;
  return {reach + nodes_, reach + 2 * nodes_ + 1};
}

std::span<const double> PddtCore::node_outputs(
    std::span<const double> workspace) const {
  return workspace.subspan(width_ + nodes_, nodes_);
}

void PddtCore::propagate(std::span<const double> workspace,
                         std::span<const double> dlogits,
                         std::span<double> dinput, double* grad) const {
  const double* x = workspace.data();
  const double* pre = x + width_;
  const double* d = pre + nodes_;
  const double* sel = d + nodes_;
  const double* reach = sel + nodes_;
  const double* leaves = params_.value.data() + leaf_offset();

  thread_local std::vector<double> value;
  thread_local std::vector<double> dx;
  thread_local std::vector<double> probs;
  thread_local std::vector<double> u;
  value.assign(2 * nodes_ + 1, 0.0);
  dx.assign(width_, 0.0);
  probs.resize(width_);
  u.resize(width_);

  for (std::size_t l = 0; l < leaf_count(); ++l) {
    double v = 0.0;
    for (std::size_t k = 0; k < outputs_; ++k) {
      v += leaves[l * outputs_ + k] * dlogits[k];
      if (grad) {
        grad[leaf_offset() + l * outputs_ + k] += reach[nodes_ + l] * dlogits[k];
      }
    }
    value[nodes_ + l] = v;
  }
  const bool straight = selection_ == SelectionGradient::kStraightThrough;
  for (std::size_t ii = nodes_; ii-- > 0;) {
    const double vl = value[2 * ii + 1];
    const double vr = value[2 * ii + 2];
    value[ii] = d[ii] * vl + (1.0 - d[ii]) * vr;
    const double dpre = reach[ii] * (vl - vr) * d[ii] * (1.0 - d[ii]);
    if (dpre == 0.0) continue;
    const double a = alpha(ii);
    const double* p = params_.value.data() + ii * node_stride();
    double* g = grad ? grad + ii * node_stride() : nullptr;
    if (g && !alpha_override_) g[3 * width_] += kAlphaRate * dpre * pre[ii];
    if (!straight) {
      const auto j = static_cast<std::size_t>(sel[ii]);
      if (g) {
        g[j] += dpre * a * x[j];
        g[width_ + j] -= dpre * a;
      }
      dx[j] += dpre * a * p[j];
      continue;
    }
    const double* s = p + 2 * width_;
    const double smax = *std::max_element(s, s + width_);
    double z = 0.0;
    for (std::size_t k = 0; k < width_; ++k) {
      probs[k] = std::exp(s[k] - smax);
      z += probs[k];
    }
    double ubar = 0.0;
    for (std::size_t k = 0; k < width_; ++k) {
      probs[k] /= z;
      u[k] = p[k] * x[k] - p[width_ + k];
      ubar += probs[k] * u[k];
    }
    for (std::size_t k = 0; k < width_; ++k) {
      const double t = dpre * a * probs[k];
      if (g) {
        g[k] += t * x[k];
        g[width_ + k] -= t;
        g[2 * width_ + k] += t * (u[k] - ubar);
      }
      dx[k] += t * p[k];
    }
  }
  if (!dinput.empty()) {
    for (std::size_t k = 0; k < width_; ++k) {
      dinput[k] = scaler_.empty() ? dx[k] : dx[k] / scaler_.scale[k];
    }
  }
}

void PddtCore::backward(std::span<const double> /*input*/,
                        std::span<const double> workspace,
                        std::span<const double> dlogits,
                        std::span<double> dinput) {
  propagate(workspace, dlogits, dinput, params_.gradient.data());
}

void PddtCore::input_gradient(std::span<const double> /*input*/,
                              std::span<const double> workspace,
                              std::span<const double> dlogits,
                              std::span<double> dinput) const {
  propagate(workspace, dlogits, dinput, nullptr);
}

nlohmann::json PddtCore::to_json() const {
  return {{"kind", "pddt"},
          {"input_width", width_},
          {"output_width", outputs_},
          {"depth", depth_},
          {"parameters", params_.value},
          {"scaler", scaler_.to_json()}};
}

std::unique_ptr<PddtCore> PddtCore::from_json(const nlohmann::json& j) {
  auto core = std::make_unique<PddtCore>(
      j.at("input_width").get<std::size_t>(),
      j.at("output_width").get<std::size_t>(),
      j.at("depth").get<std::size_t>(), 0);
  auto values = j.at("parameters").get<std::vector<double>>();
  if (values.size() != core->params_.size()) {
    throw std::invalid_argument("pddt checkpoint: parameter count mismatch");
  }
  core->params_.value = std::move(values);
  core->set_scaler(pnn::InputScaler::from_json(j.at("scaler")));
  return core;
}

// ---------------------------------------------------------------- crisp tree

std::vector<double> CrispTree::leaf_probabilities(std::size_t leaf) const {
  const auto& logits = leaf_logits.at(leaf);
  std::vector<double> p(logits.size());
  diffcore::softmax(logits, p, {});
  return p;
}

std::size_t CrispTree::leaf_index(std::span<const double> input) const {
  if (nodes.empty()) return 0;
  CrispChild at{false, 0};
  while (!at.leaf) {
    const CrispNode& n = nodes.at(at.index);
    if (n.feature >= input.size()) {
      throw std::invalid_argument("crisp tree: input too short");
    }
    at = n.weight * input[n.feature] > n.threshold ? n.if_true : n.if_false;
  }
  return at.index;
}

std::size_t CrispTree::style_node_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) n += is_style_node(i) ? 1 : 0;
  return n;
}

nlohmann::json CrispTree::to_json() const {
  nlohmann::json jn = nlohmann::json::array();
  auto child = [](const CrispChild& c) {
    return nlohmann::json{{"leaf", c.leaf}, {"index", c.index}};
  };
  for (const auto& n : nodes) {
    jn.push_back({{"feature", n.feature},
                  {"weight", n.weight},
                  {"threshold", n.threshold},
                  {"true", child(n.if_true)},
                  {"false", child(n.if_false)}});
  }
  return {{"format", "apprentice-crisp-tree v1"},
          {"nodes", jn},
          {"leaf_classes", leaf_classes},
          {"leaf_logits", leaf_logits},
          {"feature_names", feature_names},
          {"class_names", class_names},
          {"embedding_dim", embedding_dim}};
}

CrispTree CrispTree::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-crisp-tree v1") {
    throw std::invalid_argument("crisp tree: unsupported format");
  }
  CrispTree t;
  auto child = [](const nlohmann::json& c) {
    return CrispChild{c.at("leaf").get<bool>(), c.at("index").get<std::size_t>()};
  };
  for (const auto& n : j.at("nodes")) {
    t.nodes.push_back({n.at("feature").get<std::size_t>(),
                       n.at("weight").get<double>(),
                       n.at("threshold").get<double>(), child(n.at("true")),
                       child(n.at("false"))});
  }
  t.leaf_classes = j.at("leaf_classes").get<std::vector<int>>();
  t.leaf_logits = j.at("leaf_logits").get<std::vector<std::vector<double>>>();
  if (t.leaf_logits.size() != t.leaf_classes.size()) {
    throw std::invalid_argument("crisp tree: leaf_logits size mismatch");
  }
  t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  t.class_names = j.at("class_names").get<std::vector<std::string>>();
  t.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  return t;
}

CrispTree crispify(const PddtCore& core,
                   const std::vector<std::string>& feature_names,
                   std::size_t embedding_dim,
                   std::vector<std::string> class_names) {
  CrispTree t;
  t.feature_names = feature_names;
  t.embedding_dim = embedding_dim;
  t.class_names = std::move(class_names);
  const std::size_t n = core.node_count();
  const auto& scaler = core.scaler();
  for (std::size_t i = 0; i < n; ++i) {
    CrispNode node;
    node.feature = core.selected_feature(i);
    const double w = core.weight(i, node.feature);
    const double c = core.comparison(i, node.feature);
    if (scaler.empty()) {
      node.weight = w;
      node.threshold = c;
    } else {
      // w * (x - mu) / sigma > c  <=>  (w / sigma) * x > c + w * mu / sigma
      const double mu = scaler.offset[node.feature];
      const double sigma = scaler.scale[node.feature];
      node.weight = w / sigma;
      node.threshold = c + w * mu / sigma;
    }
    auto child = [&](std::size_t h) {
      return h >= n ? CrispChild{true, h - n} : CrispChild{false, h};
    };
    node.if_true = child(2 * i + 1);
    node.if_false = child(2 * i + 2);
    t.nodes.push_back(node);
  }
  for (std::size_t l = 0; l < core.leaf_count(); ++l) {
    const auto logits = core.leaf(l);
    t.leaf_classes.push_back(pairwise::argmax(logits));
    t.leaf_logits.emplace_back(logits.begin(), logits.end());
  }
  return t;
}

CrispTree crispify(const pnn::PersonalizedModel& model) {
  const auto* core = dynamic_cast<const PddtCore*>(&model.core());
  if (!core) throw std::invalid_argument("crispify: model core is not a PDDT");
  const auto& spec = model.spec();
  std::vector<std::string> classes;
  if (spec.framing == pairwise::Framing::kStandard) {
    for (std::size_t a = 0; a < spec.action_count; ++a) {
      classes.push_back("action " + std::to_string(a));
    }
  } else if (spec.framing == pairwise::Framing::kPairwise) {
    classes = {"second preferred", "first preferred"};
  } else {
    classes = {"not taken", "taken"};
  }
  return crispify(*core, spec.feature_names, spec.embedding_dim,
                  std::move(classes));
}

TreeFormat tree_format_from_string(const std::string& name) {
  if (name == "text") return TreeFormat::kText;
  if (name == "dot") return TreeFormat::kDot;
  throw std::invalid_argument("unknown tree format '" + name +
                              "' (expected text or dot)");
}

namespace {

std::string feature_label(const CrispTree& t, std::size_t f) {
  return f < t.feature_names.size() ? t.feature_names[f]
                                    : "x" + std::to_string(f);
}

std::string class_label(const CrispTree& t, int c) {
  const auto i = static_cast<std::size_t>(c);
  return i < t.class_names.size() ? t.class_names[i]
                                  : "class " + std::to_string(c);
}

std::string test_label(const CrispTree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  std::ostringstream os;
  os.precision(6);
  os << n.weight << "*" << feature_label(t, n.feature) << " > " << n.threshold;
  return os.str();
}

void text_node(const CrispTree& t, const CrispChild& at, std::size_t depth,
               const std::string& prefix, std::ostringstream& os) {
  const std::string pad(2 * depth, ' ');
  if (at.leaf) {
    os << pad << prefix << "class " << t.leaf_classes.at(at.index) << " ("
       << class_label(t, t.leaf_classes.at(at.index)) << ")\n";
    return;
  }
  os << pad << prefix << (t.is_style_node(at.index) ? "[style] " : "[constraint] ")
     << test_label(t, at.index) << "\n";
  text_node(t, t.nodes[at.index].if_true, depth + 1, "true: ", os);
  text_node(t, t.nodes[at.index].if_false, depth + 1, "false: ", os);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string export_tree(const CrispTree& tree, TreeFormat format) {
  std::ostringstream os;
  if (format == TreeFormat::kText) {
    if (tree.nodes.empty()) {
      text_node(tree, {true, 0}, 0, "", os);
    } else {
      text_node(tree, {false, 0}, 0, "", os);
    }
    return os.str();
  }
  os << "digraph pddt {\n  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const bool style = tree.is_style_node(i);
    os << "  n" << i << " [shape=box, style=filled, fillcolor=\""
       << (style ? "lightblue" : "lightgray") << "\", label=\""
       << (style ? "style: " : "constraint: ")
       << dot_escape(test_label(tree, i)) << "\"];\n";
  }
  for (std::size_t l = 0; l < tree.leaf_classes.size(); ++l) {
    os << "  l" << l << " [shape=ellipse, label=\""
       << dot_escape(class_label(tree, tree.leaf_classes[l])) << "\"];\n";
  }
  auto ref = [](const CrispChild& c) {
    return (c.leaf ? "l" : "n") + std::to_string(c.index);
  };
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    os << "  n" << i << " -> " << ref(tree.nodes[i].if_true)
       << " [label=\"true\"];\n";
    os << "  n" << i << " -> " << ref(tree.nodes[i].if_false)
       << " [label=\"false\"];\n";
  }
  os << "}\n";
  return os.str();
}

pairwise::ActionDistribution crisp_predict(const CrispTree& tree,
                                           const pnn::ModelSpec& spec,
                                           const dataset::Observation& obs,
                                           std::span<const double> embedding) {
  std::vector<double> input(spec.input_width());
  switch (spec.framing) {
    case pairwise::Framing::kPairwise:
      return pairwise::marginalize(
          obs,
          [&](int a, int b) {
            pairwise::pairwise_features(obs, embedding, a, b, input);
            return tree.leaf_probabilities(tree.leaf_index(input))[1];
          },
          spec.marginal);
    case pairwise::Framing::kPointwise: {
      pairwise::ActionDistribution out;
      out.probabilities.assign(obs.action_count(), 0.0);
      const auto avail = obs.available_actions();
      double total = 0.0;
      for (int a : avail) {
        auto it = std::copy(embedding.begin(), embedding.end(), input.begin());
        it = std::copy(obs.context.begin(), obs.context.end(), it);
        const auto& xa = obs.action_features[static_cast<std::size_t>(a)];
        std::copy(xa.begin(), xa.end(), it);
        const double p = tree.leaf_probabilities(tree.leaf_index(input))[1];
        out.probabilities[static_cast<std::size_t>(a)] = p;
        total += p;
      }
      if (total == 0.0) {
        out.degenerate = true;
        for (int a : avail) {
          out.probabilities[static_cast<std::size_t>(a)] =
              1.0 / static_cast<double>(avail.size());
        }
      } else {
        for (double& p : out.probabilities) p /= total;
      }
      out.action = pairwise::argmax(out.probabilities);
      return out;
    }
    case pairwise::Framing::kStandard: {
      const auto ex = pairwise::build_standard(obs, embedding);
      pairwise::ActionDistribution out;
      out.probabilities.assign(obs.action_count(), 0.0);
      const int c = tree.predict(ex.features);
      if (c >= 0 && static_cast<std::size_t>(c) < ex.mask.size() &&
          ex.mask[static_cast<std::size_t>(c)]) {
        out.probabilities[static_cast<std::size_t>(c)] = 1.0;
      } else {
        out.degenerate = true;
        const auto avail = obs.available_actions();
        for (int a : avail) {
          out.probabilities[static_cast<std::size_t>(a)] =
              1.0 / static_cast<double>(avail.size());
        }
      }
      out.action = pairwise::argmax(out.probabilities);
      return out;
    }
  }
  throw std::logic_error("crisp_predict: unknown framing");
}

CrispPolicy::CrispPolicy(const pnn::PersonalizedModel& continuous,
                         CrispTree tree, pnn::AdaptConfig config)
    : model_(continuous), tree_(std::move(tree)), adapter_(continuous, config) {}

void CrispPolicy::begin(const dataset::Schedule&) { adapter_.reset(); }

pairwise::ActionDistribution CrispPolicy::predict(
    const dataset::Observation& obs) {
  return crisp_predict(tree_, model_.spec(), obs, adapter_.current());
}

void CrispPolicy::observe(const dataset::Observation& obs) {
  adapter_.observe(obs);
}

pnn::PersonalizedModel make_pddt(const dataset::DemonstrationSet& set,
                                 pairwise::Framing framing,
                                 std::size_t embedding_dim,
                                 const PddtConfig& config, std::uint64_t seed,
                                 pairwise::LabelMode labels) {
  auto spec = pnn::ModelSpec::for_dataset(set, framing, embedding_dim, labels);
  auto core = std::make_unique<PddtCore>(spec.input_width(),
                                         spec.output_width(), config.depth, seed);
  return pnn::PersonalizedModel(std::move(spec), std::move(core));
}

std::unique_ptr<pnn::DifferentiableCore> load_any_core(const nlohmann::json& j) {
  const auto kind = j.value("kind", std::string{});
  if (kind == "pddt") return PddtCore::from_json(j);
  return pnn::load_mlp_core(j);
}

pnn::PersonalizedModel load_any_model(const std::filesystem::path& path) {
  return pnn::load_model(path, load_any_core);
}

}  // namespace apprentice::pddt
