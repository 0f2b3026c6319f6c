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
#include <optional>
#include <string>
#include <vector>

#include "apprentice/pnn/checkpoint.hpp"
#include "apprentice/pnn/core.hpp"
#include "apprentice/pnn/personalized_model.hpp"

namespace apprentice::pddt {

/// How the selective-importance scores receive gradient.
enum class SelectionGradient {
  /// Forward uses the one-hot argmax, backward the softmax of the scores.
  kStraightThrough,
  /// Backward uses the same one-hot as the forward pass; scores get no
  /// gradient. This is the exact derivative of the forward function.
  kFrozen,
};

/// Balanced soft decision tree. Node i (heap order, children 2i+1 / 2i+2)
/// computes D_i = sigmoid(alpha_i * (w_ij * x_j - c_ij)) for the single
/// feature j = argmax s_i. D_i is the probability of the true (left) branch.
/// The logits are the path-probability weighted sum of the leaf vectors.
class PddtCore final : public pnn::DifferentiableCore {
 public:
  PddtCore(std::size_t input_width, std::size_t output_width,
           std::size_t depth, std::uint64_t seed);

  std::string kind() const override { return "pddt"; }
  std::size_t input_width() const override { return width_; }
  std::size_t output_width() const override { return outputs_; }
  std::size_t workspace_size() const override;

  void forward(std::span<const double> input, std::span<double> logits,
               std::span<double> workspace) const override;
  void backward(std::span<const double> input,
                std::span<const double> workspace,
                std::span<const double> dlogits,
                std::span<double> dinput) override;
  void input_gradient(std::span<const double> input,
                      std::span<const double> workspace,
                      std::span<const double> dlogits,
                      std::span<double> dinput) const override;

  std::vector<diffcore::ParameterBlock*> parameters() override {
    return {&params_};
  }
  std::vector<const diffcore::ParameterBlock*> parameters() const override {
    return {&params_};
  }
  std::unique_ptr<pnn::DifferentiableCore> clone() const override {
    return std::make_unique<PddtCore>(*this);
  }
  nlohmann::json to_json() const override;
  static std::unique_ptr<PddtCore> from_json(const nlohmann::json& j);

  std::size_t depth() const { return depth_; }
  std::size_t node_count() const { return nodes_; }
  std::size_t leaf_count() const { return nodes_ + 1; }

  /// argmax of the node's importance scores, ties to the lowest index.
  std::size_t selected_feature(std::size_t node) const;
  double weight(std::size_t node, std::size_t feature) const;
  double comparison(std::size_t node, std::size_t feature) const;
  double importance(std::size_t node, std::size_t feature) const;
  /// Effective steepness (the override if one is set).
  double alpha(std::size_t node) const;
  std::span<const double> leaf(std::size_t leaf) const;

  /// Hand construction. alpha must be > 0.
  void set_node(std::size_t node, std::span<const double> weights,
                std::span<const double> comparisons,
                std::span<const double> importances, double alpha);
  void set_leaf(std::size_t leaf, std::span<const double> values);

  /// Evaluate every node with this steepness instead of the learned one.
  void set_alpha_override(std::optional<double> alpha);
  void set_selection_gradient(SelectionGradient mode) { selection_ = mode; }
  SelectionGradient selection_gradient() const { return selection_; }

  /// Probability of reaching each leaf (sums to 1).
  std::vector<double> path_probabilities(std::span<const double> input) const;
  /// Node outputs D_i from a filled workspace.
  std::span<const double> node_outputs(std::span<const double> workspace) const;

 private:
  std::size_t node_stride() const { return 3 * width_ + 1; }
  std::size_t leaf_offset() const { return nodes_ * node_stride(); }
  void propagate(std::span<const double> workspace,
                 std::span<const double> dlogits, std::span<double> dinput,
                 double* grad) const;

  std::size_t width_;
  std::size_t outputs_;
  std::size_t depth_;
  std::size_t nodes_;
  diffcore::ParameterBlock params_;
  std::optional<double> alpha_override_;
  SelectionGradient selection_ = SelectionGradient::kStraightThrough;
};

/// Reference to a node or a leaf of a CrispTree.
struct CrispChild {
  bool leaf = false;
  std::size_t index = 0;
};

struct CrispNode {
  std::size_t feature = 0;
  double weight = 0.0;
  double threshold = 0.0;
  CrispChild if_true;
  CrispChild if_false;
};

/// Hard decision tree over raw (unstandardized) inputs. A node branches to
/// if_true iff weight * x[feature] > threshold.
struct CrispTree {
  std::vector<CrispNode> nodes;
  std::vector<int> leaf_classes;
  std::vector<std::vector<double>> leaf_logits;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  /// Features [0, embedding_dim) are embedding coordinates.
  std::size_t embedding_dim = 0;

  std::size_t leaf_index(std::span<const double> input) const;
  int predict(std::span<const double> input) const {
    return leaf_classes.at(leaf_index(input));
  }
  /// Softmax of the leaf's logits.
  std::vector<double> leaf_probabilities(std::size_t leaf) const;
  bool is_style_node(std::size_t node) const {
    return nodes.at(node).feature < embedding_dim;
  }
  /// Number of nodes that split on an embedding coordinate.
  std::size_t style_node_count() const;

  nlohmann::json to_json() const;
  static CrispTree from_json(const nlohmann::json& j);
};

/// Argmax feature, its weight and comparison value, hard threshold and
/// argmax leaf class; input standardization is folded into the thresholds.
CrispTree crispify(const PddtCore& core,
                   const std::vector<std::string>& feature_names,
                   std::size_t embedding_dim,
                   std::vector<std::string> class_names = {});
CrispTree crispify(const pnn::PersonalizedModel& model);

enum class TreeFormat { kText, kDot };
TreeFormat tree_format_from_string(const std::string& name);
std::string export_tree(const CrispTree& tree, TreeFormat format);

/// Distribution predicted by a crisp tree of a model with this spec. Pairwise
/// and pointwise scores are the leaf probability of the positive class.
pairwise::ActionDistribution crisp_predict(const CrispTree& tree,
                                           const pnn::ModelSpec& spec,
                                           const dataset::Observation& obs,
                                           std::span<const double> embedding);

/// Discrete tree driven by embeddings adapted with the continuous model.
class CrispPolicy : public pnn::OnlinePolicy {
 public:
  CrispPolicy(const pnn::PersonalizedModel& continuous, CrispTree tree,
              pnn::AdaptConfig config);
  void begin(const dataset::Schedule& schedule) override;
  pairwise::ActionDistribution predict(const dataset::Observation& obs) override;
  void observe(const dataset::Observation& obs) override;
  const CrispTree& tree() const { return tree_; }

 private:
  const pnn::PersonalizedModel& model_;
  CrispTree tree_;
  pnn::EmbeddingAdapter adapter_;
};

struct PddtConfig {
  std::size_t depth = 4;
};

pnn::PersonalizedModel make_pddt(const dataset::DemonstrationSet& set,
                                 pairwise::Framing framing,
                                 std::size_t embedding_dim,
                                 const PddtConfig& config, std::uint64_t seed,
                                 pairwise::LabelMode labels =
                                     pairwise::LabelMode::kSingle);

/// Checkpoint core loader that understands both MLP and PDDT cores.
std::unique_ptr<pnn::DifferentiableCore> load_any_core(const nlohmann::json& j);
pnn::PersonalizedModel load_any_model(const std::filesystem::path& path);

}  // namespace apprentice::pddt
