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

#include "apprentice/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "apprentice/diffcore/rng.hpp"
#include "apprentice/pnn/checkpoint.hpp"

namespace apprentice::baselines {

namespace {

double gini_mass(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return total - sq / total;
}

struct CartBuilder {
  std::span<const double> x;
  std::size_t width;
  std::span<const int> y;
  std::vector<double> w;
  std::size_t classes;
  CartConfig config;
  std::vector<CartNode> nodes;

  int grow(std::vector<std::size_t>& idx, std::size_t depth) {
    CartNode node;
    node.class_weight.assign(classes, 0.0);
    double total = 0.0;
    for (std::size_t i : idx) {
      node.class_weight[static_cast<std::size_t>(y[i])] += w[i];
      total += w[i];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);

    const double parent = gini_mass(node.class_weight, total);
    if (depth >= config.max_depth || idx.size() < config.min_samples_split ||
        parent <= 1e-12 * total) {
      return id;
    }

    double best = parent - 1e-12 * std::max(total, 1.0);
    int best_f = -1;
    double best_t = 0.0;
    std::vector<std::pair<double, std::size_t>> order(idx.size());
    std::vector<double> left(classes), right(classes);
    for (std::size_t f = 0; f < width; ++f) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        order[k] = {x[idx[k] * width + f], idx[k]};
      }
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      right = node.class_weight;
      double wl = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k].second;
        const auto c = static_cast<std::size_t>(y[i]);
        left[c] += w[i];
        right[c] -= w[i];
        wl += w[i];
        if (order[k].first == order[k + 1].first) continue;
        const double imp = gini_mass(left, wl) + gini_mass(right, total - wl);
        if (imp < best) {
          best = imp;
          best_f = static_cast<int>(f);
          best_t = 0.5 * (order[k].first + order[k + 1].first);
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx) {
      (x[i * width + static_cast<std::size_t>(best_f)] <= best_t ? li : ri)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes[static_cast<std::size_t>(id)].feature = best_f;
    nodes[static_cast<std::size_t>(id)].threshold = best_t;
    const int l = grow(li, depth + 1);
    const int r = grow(ri, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

std::vector<double> one_hot(std::size_t n, std::size_t i) {
  std::vector<double> v(n, 0.0);
  v.at(i) = 1.0;
  return v;
}

void finish(pairwise::ActionDistribution& out, const dataset::Observation& obs) {
  const auto avail = obs.available_actions();
  double total = 0.0;
  for (int a : avail) total += out.probabilities[static_cast<std::size_t>(a)];
  if (total <= 0.0) {
    out.degenerate = true;
    for (int a : avail) {
      out.probabilities[static_cast<std::size_t>(a)] =
          1.0 / static_cast<double>(avail.size());
    }
  } else {
    for (double& p : out.probabilities) p /= total;
  }
  out.action = pairwise::argmax(out.probabilities);
}

bool hit(const dataset::Observation& obs, int action) {
  return std::find(obs.taken_actions.begin(), obs.taken_actions.end(),
                   action) != obs.taken_actions.end();
}

std::vector<std::vector<double>> zscore(std::vector<std::vector<double>> pts) {
  if (pts.empty()) return pts;
  const std::size_t d = pts.front().size();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0, sq = 0.0;
    for (const auto& p : pts) mean += p[j];
    mean /= static_cast<double>(pts.size());
    for (const auto& p : pts) sq += (p[j] - mean) * (p[j] - mean);
    double sd = std::sqrt(sq / static_cast<double>(pts.size()));
    if (sd < 1e-9) sd = 1.0;
    for (auto& p : pts) p[j] = (p[j] - mean) / sd;
  }
  return pts;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::size_t nearest(const std::vector<std::vector<double>>& centroids,
                    std::span<const double> p, double* dist = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(centroids[c], p);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  if (dist) *dist = bd;
  return best;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------- CART

std::size_t CartTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    out = std::max(out, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return out;
}

std::size_t CartTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const CartNode& n) { return n.feature < 0; }));
}

std::size_t CartTree::leaf(std::span<const double> x) const {
  if (x.size() != width_) throw std::invalid_argument("CartTree: input width");
  std::size_t i = 0;
  while (nodes_.at(i).feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(
        x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::vector<double> CartTree::distribution(std::span<const double> x) const {
  auto d = nodes_[leaf(x)].class_weight;
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  if (total > 0.0) {
    for (double& v : d) v /= total;
  }
  return d;
}

int CartTree::predict(std::span<const double> x) const {
  return pairwise::argmax(nodes_[leaf(x)].class_weight);
}

nlohmann::json CartTree::to_json() const {
  nlohmann::json jn = nlohmann::json::array();
  for (const auto& n : nodes_) {
    jn.push_back({{"feature", n.feature},
                  {"threshold", n.threshold},
                  {"left", n.left},
                  {"right", n.right},
                  {"class_weight", n.class_weight}});
  }
  return {{"format", "apprentice-cart v1"},
          {"width", width_},
          {"classes", classes_},
          {"nodes", jn}};
}

CartTree CartTree::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-cart v1") {
    throw std::invalid_argument("cart: unsupported format");
  }
  CartTree t;
  t.width_ = j.at("width").get<std::size_t>();
  t.classes_ = j.at("classes").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    CartNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.class_weight = n.at("class_weight").get<std::vector<double>>();
    t.nodes_.push_back(std::move(node));
  }
  const auto n = static_cast<int>(t.nodes_.size());
  if (n == 0) throw std::invalid_argument("cart: no nodes");
  for (const auto& node : t.nodes_) {
    if (node.class_weight.size() != t.classes_ ||
        (node.feature >= 0 &&
         (static_cast<std::size_t>(node.feature) >= t.width_ || node.left <= 0 ||
          node.right <= 0 || node.left >= n || node.right >= n))) {
      throw std::invalid_argument("cart: malformed node");
    }
  }
  return t;
}

CartTree fit_cart(std::span<const double> features, std::size_t width,
                  std::span<const int> labels, std::span<const double> weights,
                  std::size_t class_count, const CartConfig& config) {
  if (labels.empty()) throw std::invalid_argument("fit_cart: no examples");
  if (features.size() != labels.size() * width) {
    throw std::invalid_argument("fit_cart: feature/label size mismatch");
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw std::invalid_argument("fit_cart: weight size mismatch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw std::invalid_argument("fit_cart: label out of range");
    }
  }
  CartBuilder b{features, width, labels, {}, class_count, config, {}};
  b.w = weights.empty() ? std::vector<double>(labels.size(), 1.0)
                        : std::vector<double>(weights.begin(), weights.end());
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.grow(idx, 0);
  CartTree t;
  t.width_ = width;
  t.classes_ = class_count;
  t.nodes_ = std::move(b.nodes);
  return t;
}

pairwise::ActionDistribution DtModel::predict(
    const dataset::Observation& obs, std::span<const double> embedding) const {
  if (embedding.size() != embedding_dim) {
    throw std::invalid_argument("DtModel: embedding width");
  }
  std::vector<double> input(tree.width());
  pairwise::ActionDistribution out;
  out.probabilities.assign(obs.action_count(), 0.0);
  switch (framing) {
    case pairwise::Framing::kPairwise:
      return pairwise::marginalize(obs, [&](int a, int b) {
        pairwise::pairwise_features(obs, embedding, a, b, input);
        return tree.distribution(input)[1];
      });
    case pairwise::Framing::kPointwise:
      for (int a : obs.available_actions()) {
        auto it = std::copy(embedding.begin(), embedding.end(), input.begin());
        it = std::copy(obs.context.begin(), obs.context.end(), it);
        const auto& xa = obs.action_features[static_cast<std::size_t>(a)];
        std::copy(xa.begin(), xa.end(), it);
        out.probabilities[static_cast<std::size_t>(a)] = tree.distribution(input)[1];
      }
      break;
    case pairwise::Framing::kStandard: {
      const auto ex = pairwise::build_standard(obs, embedding);
      const auto d = tree.distribution(ex.features);
      for (int a : obs.available_actions()) {
        out.probabilities[static_cast<std::size_t>(a)] =
            d.at(static_cast<std::size_t>(a));
      }
      break;
    }
  }
  finish(out, obs);
  return out;
}

nlohmann::json DtModel::to_json() const {
  return {{"format", "apprentice-dt v1"},
          {"framing", pairwise::to_string(framing)},
          {"embedding_dim", embedding_dim},
          {"tree", tree.to_json()}};
}

DtModel DtModel::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-dt v1") {
    throw std::invalid_argument("dt: unsupported format");
  }
  DtModel m;
  m.framing = pairwise::framing_from_string(j.at("framing").get<std::string>());
  m.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  m.tree = CartTree::from_json(j.at("tree"));
  return m;
}

DtModel fit_dt(const pairwise::RowSet& rows, pairwise::Framing framing,
               const std::vector<std::vector<double>>& embeddings,
               const CartConfig& config) {
  if (rows.rows() == 0) throw std::invalid_argument("fit_dt: no rows");
  const std::size_t d = embeddings.empty() ? 0 : embeddings.front().size();
  const std::size_t width = d + rows.width;
  std::vector<double> x;
  std::vector<int> y;
  std::vector<double> w;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto t = rows.target(r);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] <= 0.0) continue;
      if (d) {
        const auto& e = embeddings.at(rows.owner[r]);
        if (e.size() != d) throw std::invalid_argument("fit_dt: embedding width");
        x.insert(x.end(), e.begin(), e.end());
      }
      const auto row = rows.row(r);
      x.insert(x.end(), row.begin(), row.end());
      y.push_back(static_cast<int>(k));
      w.push_back(rows.weight[r] * t[k]);
    }
  }
  DtModel m;
  m.framing = framing;
  m.embedding_dim = d;
  m.tree = fit_cart(x, width, y, w, rows.output_width, config);
  return m;
}

DtModel fit_plain_dt(const dataset::DemonstrationSet& train,
                     pairwise::Framing framing, const CartConfig& config) {
  pairwise::FramingSpec spec;
  spec.framing = framing;
  const std::vector<std::uint32_t> owners(train.schedules.size(), 0);
  return fit_dt(pairwise::build_rows(train, spec, owners), framing, {}, config);
}

// --------------------------------------------------------------- clustering

KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  if (points.empty() || k == 0) {
    throw std::invalid_argument("kmeans: need points and k >= 1");
  }
  k = std::min(k, points.size());
  Rng rng(seed);
  KMeansResult res;
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  res.centroids.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  while (res.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest(res.centroids, points[i], &d2[i]);
      total += d2[i];
    }
    std::size_t next = 0;
    if (total <= 0.0) {
      next = pick(rng);
    } else {
      std::discrete_distribution<std::size_t> dd(d2.begin(), d2.end());
      next = dd(rng);
    }
    res.centroids.push_back(points[next]);
  }

  const std::size_t dim = points.front().size();
  res.assignment.assign(points.size(), k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = nearest(res.centroids, points[i]);
      if (c != res.assignment[i]) changed = true;
      res.assignment[i] = c;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> n(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = res.assignment[i];
      ++n[c];
      for (std::size_t j = 0; j < dim; ++j) sum[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (n[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        res.centroids[c][j] = sum[c][j] / static_cast<double>(n[c]);
      }
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      obj += sq_dist(points[i], res.centroids[res.assignment[i]]);
    }
    res.objective.push_back(obj);
  }
  return res;
}

double GmmResult::log_density(std::span<const double> x, std::size_t c) const {
  constexpr double kLog2Pi = 1.8378770664093453;
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = variances[c][j];
    const double d = x[j] - means[c][j];
    s += kLog2Pi + std::log(v) + d * d / v;
  }
  return -0.5 * s;
}

GmmResult fit_gmm(const std::vector<std::vector<double>>& points, std::size_t k,
                  std::uint64_t seed, std::size_t iterations,
                  double variance_floor) {
  const auto km = kmeans(points, k, seed);
  k = km.centroids.size();
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  GmmResult g;
  g.means = km.centroids;
  g.variances.assign(k, std::vector<double>(dim, 0.0));
  g.weights.assign(k, 0.0);
  g.responsibilities.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) g.responsibilities[i][km.assignment[i]] = 1.0;

  auto m_step = [&] {
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      std::vector<double> mu(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = g.responsibilities[i][c];
        nk += r;
        for (std::size_t j = 0; j < dim; ++j) mu[j] += r * points[i][j];
      }
      g.weights[c] = nk / static_cast<double>(n);
      if (nk <= 1e-12) {
        std::fill(g.variances[c].begin(), g.variances[c].end(), 1.0);
        continue;
      }
      for (double& v : mu) v /= nk;
      for (std::size_t j = 0; j < dim; ++j) {
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = points[i][j] - mu[j];
          var += g.responsibilities[i][c] * d * d;
        }
        g.variances[c][j] = std::max(var / nk, variance_floor);
      }
      g.means[c] = std::move(mu);
    }
  };
  auto e_step = [&] {
    double ll = 0.0;
    std::vector<double> lp(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        lp[c] = g.weights[c] > 0.0
                    ? std::log(g.weights[c]) + g.log_density(points[i], c)
                    : -std::numeric_limits<double>::infinity();
      }
      const double z = log_sum_exp(lp);
      ll += z;
      for (std::size_t c = 0; c < k; ++c) {
        g.responsibilities[i][c] = std::exp(lp[c] - z);
      }
    }
    g.log_likelihood.push_back(ll);
    return ll;
  };

  m_step();
  double prev = e_step();
  for (std::size_t it = 1; it < iterations; ++it) {
    m_step();
    const double ll = e_step();
    if (std::abs(ll - prev) <= 1e-10 * std::max(1.0, std::abs(ll))) break;
    prev = ll;
  }
  return g;
}

std::vector<double> demonstrator_summary(
    const std::vector<const dataset::Schedule*>& schedules,
    std::size_t action_count, std::size_t action_dim) {
  std::vector<double> mean(action_dim, 0.0), hist(action_count, 0.0);
  double n = 0.0;
  for (const auto* s : schedules) {
    for (const auto& obs : s->observations) {
      for (int a : obs.taken_actions) {
        const auto& xa = obs.action_features.at(static_cast<std::size_t>(a));
        for (std::size_t j = 0; j < action_dim; ++j) mean[j] += xa[j];
        hist.at(static_cast<std::size_t>(a)) += 1.0;
        n += 1.0;
      }
    }
  }
  if (n > 0.0) {
    for (double& v : mean) v /= n;
    for (double& v : hist) v /= n;
  }
  mean.insert(mean.end(), hist.begin(), hist.end());
  return mean;
}

const char* to_string(ClusterMethod m) {
  return m == ClusterMethod::kKMeans ? "kmeans" : "gmm";
}

ClusterMethod cluster_method_from_string(const std::string& name) {
  if (name == "kmeans") return ClusterMethod::kKMeans;
  if (name == "gmm") return ClusterMethod::kGmm;
  throw std::invalid_argument("unknown cluster method: " + name);
}

ClusteredModel fit_clustered(const dataset::DemonstrationSet& train,
                             const ClusterConfig& config) {
  if (config.k == 0) throw std::invalid_argument("fit_clustered: k must be >= 1");
  if (train.schedules.empty()) {
    throw std::invalid_argument("fit_clustered: no schedules");
  }
  ClusteredModel out;
  out.method = config.method;
  out.demonstrators = train.demonstrators();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.demonstrators.size(); ++i) {
    index[out.demonstrators[i]] = i;
  }
  std::vector<std::vector<const dataset::Schedule*>> by_demo(out.demonstrators.size());
  for (const auto& s : train.schedules) by_demo[index.at(s.demonstrator_id)].push_back(&s);

  std::vector<std::vector<double>> pts;
  for (const auto& group : by_demo) {
    pts.push_back(demonstrator_summary(group, train.action_count, train.action_dim));
  }
  pts = zscore(std::move(pts));

  std::vector<std::vector<double>> resp;
  if (config.method == ClusterMethod::kKMeans) {
    const auto km = kmeans(pts, config.k, config.seed);
    for (std::size_t a : km.assignment) {
      resp.push_back(one_hot(km.centroids.size(), a));
    }
  } else {
    resp = fit_gmm(pts, config.k, config.seed).responsibilities;
  }

  const std::size_t k = resp.front().size();
  std::vector<std::size_t> hard(resp.size());
  std::vector<std::size_t> members(k, 0);
  for (std::size_t i = 0; i < resp.size(); ++i) {
    hard[i] = static_cast<std::size_t>(pairwise::argmax(resp[i]));
    ++members[hard[i]];
  }
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c] > 0) kept.push_back(c);
  }
  out.dropped_clusters = config.k - kept.size();

  std::vector<std::size_t> remap(k, 0);
  for (std::size_t i = 0; i < kept.size(); ++i) remap[kept[i]] = i;
  for (std::size_t h : hard) out.assignment.push_back(remap[h]);
  for (auto& r : resp) {
    std::vector<double> nr;
    double z = 0.0;
    for (std::size_t c : kept) {
      nr.push_back(r[c]);
      z += r[c];
    }
    for (double& v : nr) v /= z;
    r = std::move(nr);
  }

  for (std::size_t c = 0; c < kept.size(); ++c) {
    dataset::DemonstrationSet subset = train;
    auto options = config.train;
    if (config.method == ClusterMethod::kKMeans) {
      subset.schedules.clear();
      for (const auto& s : train.schedules) {
        if (out.assignment[index.at(s.demonstrator_id)] == c) subset.schedules.push_back(s);
      }
      out.prior.push_back(static_cast<double>(members[kept[c]]) /
                          static_cast<double>(resp.size()));
    } else {
      options.schedule_weights.clear();
      double mass = 0.0;
      for (const auto& s : train.schedules) {
        options.schedule_weights.push_back(resp[index.at(s.demonstrator_id)][c]);
      }
      for (const auto& r : resp) mass += r[c];
      out.prior.push_back(mass / static_cast<double>(resp.size()));
    }
    auto model = pnn::make_pnn(subset, config.framing, 0, config.network,
                               config.seed + c);
    pnn::train(model, subset, options);
    out.members.push_back(std::move(model));
  }
  return out;
}

nlohmann::json ClusteredModel::to_json() const {
  nlohmann::json jm = nlohmann::json::array();
  for (const auto& m : members) jm.push_back(m.to_json());
  return {{"format", "apprentice-clustered v1"},
          {"method", to_string(method)},
          {"members", jm},
          {"prior", prior},
          {"demonstrators", demonstrators},
          {"assignment", assignment},
          {"dropped_clusters", dropped_clusters}};
}

ClusteredModel ClusteredModel::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-clustered v1") {
    throw std::invalid_argument("clustered: unsupported format");
  }
  ClusteredModel m;
  m.method = cluster_method_from_string(j.at("method").get<std::string>());
  for (const auto& jm : j.at("members")) m.members.push_back(pnn::model_from_json(jm));
  m.prior = j.at("prior").get<std::vector<double>>();
  m.demonstrators = j.at("demonstrators").get<std::vector<std::string>>();
  m.assignment = j.at("assignment").get<std::vector<std::size_t>>();
  m.dropped_clusters = j.at("dropped_clusters").get<std::size_t>();
  if (m.members.empty() || m.prior.size() != m.members.size()) {
    throw std::invalid_argument("clustered: member/prior mismatch");
  }
  return m;
}

ClusteredPolicy::ClusteredPolicy(const ClusteredModel& model) : model_(model) {
  if (model.members.empty()) throw std::invalid_argument("ClusteredPolicy: no clusters");
}

void ClusteredPolicy::begin(const dataset::Schedule&) {
  score_.clear();
  for (double p : model_.prior) score_.push_back(std::log(std::max(p, 1e-12)));
}

std::size_t ClusteredPolicy::current_cluster() const {
  return static_cast<std::size_t>(pairwise::argmax(score_));
}

pairwise::ActionDistribution ClusteredPolicy::predict(
    const dataset::Observation& obs) {
  return model_.members[current_cluster()].predict(obs, {});
}

void ClusteredPolicy::observe(const dataset::Observation& obs) {
  for (std::size_t c = 0; c < model_.members.size(); ++c) {
    const auto d = model_.members[c].predict(obs, {});
    for (int a : obs.taken_actions) {
      score_[c] += std::log(std::max(d.probabilities.at(static_cast<std::size_t>(a)), 1e-12));
    }
  }
}

// -------------------------------------------------------------------- EM-DT

std::vector<double> EmDtModel::mode_embedding(std::size_t mode) const {
  return one_hot(modes, mode);
}

nlohmann::json EmDtModel::to_json() const {
  return {{"format", "apprentice-emdt v1"},
          {"dt", dt.to_json()},
          {"modes", modes},
          {"mode_probability", mode_probability},
          {"iterations_run", iterations_run},
          {"converged", converged},
          {"train_accuracy", train_accuracy}};
}

EmDtModel EmDtModel::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "apprentice-emdt v1") {
    throw std::invalid_argument("emdt: unsupported format");
  }
  EmDtModel m;
  m.dt = DtModel::from_json(j.at("dt"));
  m.modes = j.at("modes").get<std::size_t>();
  m.mode_probability = j.at("mode_probability").get<std::vector<std::vector<double>>>();
  m.iterations_run = j.at("iterations_run").get<std::size_t>();
  m.converged = j.at("converged").get<bool>();
  m.train_accuracy = j.at("train_accuracy").get<std::vector<double>>();
  if (m.dt.embedding_dim != m.modes) {
    throw std::invalid_argument("emdt: embedding width does not match modes");
  }
  return m;
}

EmDtModel fit_em_dt(const dataset::DemonstrationSet& train,
                    const EmDtConfig& config) {
  if (config.modes < 1) throw std::invalid_argument("fit_em_dt: modes must be >= 1");
  if (train.schedules.empty()) throw std::invalid_argument("fit_em_dt: no schedules");
  const std::size_t S = train.schedules.size();
  const std::size_t M = config.modes;
  std::vector<std::vector<double>> embeddings;
  for (std::size_t m = 0; m < M; ++m) embeddings.push_back(one_hot(M, m));
  pairwise::FramingSpec spec;
  spec.framing = config.framing;

  Rng rng(config.seed);
  EmDtModel cur;
  cur.modes = M;
  cur.mode_probability.assign(S, std::vector<double>(M, 1.0 / static_cast<double>(M)));
  std::vector<std::size_t> prev_assign;
  EmDtModel best;
  double best_acc = -1.0;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<std::uint32_t> owners(S);
    for (std::size_t s = 0; s < S; ++s) {
      std::discrete_distribution<std::uint32_t> dd(cur.mode_probability[s].begin(),
                                                   cur.mode_probability[s].end());
      owners[s] = dd(rng);
    }
    cur.dt = fit_dt(pairwise::build_rows(train, spec, owners), config.framing,
                    embeddings, config.cart);

    std::vector<std::size_t> assign(S);
    std::size_t correct = 0, total = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const auto& sched = train.schedules[s];
      std::vector<double> hits(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (const auto& obs : sched.observations) {
          if (hit(obs, cur.dt.predict(obs, embeddings[m]).action)) hits[m] += 1.0;
        }
      }
      // Each correct prediction multiplies a mode's odds by e.
      const double top = *std::max_element(hits.begin(), hits.end());
      double z = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        cur.mode_probability[s][m] = std::exp(hits[m] - top);
        z += cur.mode_probability[s][m];
      }
      for (double& p : cur.mode_probability[s]) p /= z;
      assign[s] = static_cast<std::size_t>(pairwise::argmax(hits));
      correct += static_cast<std::size_t>(top);
      total += sched.observations.size();
    }
    const double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    cur.train_accuracy.push_back(acc);
    cur.iterations_run = it + 1;
    if (acc > best_acc) {
      best_acc = acc;
      best = cur;
    }
    if (assign == prev_assign) {
      cur.converged = true;
      return cur;
    }
    prev_assign = std::move(assign);
  }
  best.train_accuracy = cur.train_accuracy;
  best.iterations_run = cur.iterations_run;
  best.converged = false;
  return best;
}

void EmDtPolicy::begin(const dataset::Schedule&) {
  hits_.assign(model_.modes, 0);
}

pairwise::ActionDistribution EmDtPolicy::predict(const dataset::Observation& obs) {
  const auto m = static_cast<std::size_t>(
      std::max_element(hits_.begin(), hits_.end()) - hits_.begin());
  return model_.dt.predict(obs, model_.mode_embedding(m));
}

void EmDtPolicy::observe(const dataset::Observation& obs) {
  for (std::size_t m = 0; m < model_.modes; ++m) {
    if (hit(obs, model_.dt.predict(obs, model_.mode_embedding(m)).action)) ++hits_[m];
  }
}

// ------------------------------------------------------------ DT-on-PNN

DtModel fit_dt_on_pnn_embeddings(const pnn::PersonalizedModel& pnn,
                                 const dataset::DemonstrationSet& train,
                                 const CartConfig& config,
                                 pairwise::Framing framing) {
  const auto& table = pnn.embeddings();
  std::vector<std::vector<double>> embeddings;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto r = table.row(i);
    embeddings.emplace_back(r.begin(), r.end());
  }
  std::vector<std::uint32_t> owners;
  for (const auto& s : train.schedules) {
    owners.push_back(static_cast<std::uint32_t>(table.index_of(s.demonstrator_id)));
  }
  pairwise::FramingSpec spec;
  spec.framing = framing;
  spec.labels = pnn.spec().labels;
  return fit_dt(pairwise::build_rows(train, spec, owners), framing, embeddings,
                config);
}

DtOnPnnPolicy::DtOnPnnPolicy(const pnn::PersonalizedModel& pnn, const DtModel& dt,
                             pnn::AdaptConfig config)
    : dt_(dt), adapter_(pnn, config) {
  if (dt.embedding_dim != pnn.spec().embedding_dim) {
    throw std::invalid_argument("DtOnPnnPolicy: embedding width mismatch");
  }
}

void DtOnPnnPolicy::begin(const dataset::Schedule&) { adapter_.reset(); }

pairwise::ActionDistribution DtOnPnnPolicy::predict(const dataset::Observation& obs) {
  return dt_.predict(obs, adapter_.current());
}

void DtOnPnnPolicy::observe(const dataset::Observation& obs) { adapter_.observe(obs); }

}  // namespace apprentice::baselines
