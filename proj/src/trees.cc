/*
 * Copyright 2026 The locust-sdm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>

#include "locust_sdm/errors.h"
#include "locust_sdm/models.h"
#include "locust_sdm/random.h"

namespace locust_sdm::models {

namespace {

double Sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double LogLoss(std::span<const double> margins, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = y[i] ? -margins[i] : margins[i];
    loss += m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  return loss / static_cast<double>(margins.size());
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// CART with Gini impurity on bootstrap-weighted samples.

class GiniTreeBuilder {
 public:
  GiniTreeBuilder(const Matrix& x, std::span<const int> y,
                  std::span<const double> weight, const ForestOptions& options,
                  int mtry, Rng& rng)
      : x_(x), y_(y), weight_(weight), options_(options), mtry_(mtry),
        rng_(rng) {}

  Tree Build() {
    std::vector<std::size_t> samples;
    for (std::size_t i = 0; i < x_.rows(); ++i) {
      if (weight_[i] > 0.0) samples.push_back(i);
    }
    tree_.nodes.clear();
    Grow(samples, 0);
    return std::move(tree_);
  }

 private:
  int Grow(std::vector<std::size_t>& samples, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double total = 0.0;
    double positive = 0.0;
    for (std::size_t i : samples) {
      total += weight_[i];
      positive += weight_[i] * y_[i];
    }
    tree_.nodes[id].value = total > 0.0 ? positive / total : 0.0;
    const bool pure = positive == 0.0 || positive == total;
    if (pure || depth >= options_.max_depth ||
        samples.size() < 2 * static_cast<std::size_t>(options_.min_leaf)) {
      return id;
    }
    const Split split = FindSplit(samples, total, positive);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : samples) {
      (x_(i, split.feature) <= split.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const int l = Grow(left, depth + 1);
    tree_.nodes[id].left = l;
    const int r = Grow(right, depth + 1);
    tree_.nodes[id].right = r;
    return id;
  }

  // Weighted Gini decrease, maximized over mtry randomly drawn features.
  // Constant features do not count towards mtry. Ties resolve to the lowest
  // feature index, then the lowest threshold.
  Split FindSplit(const std::vector<std::size_t>& samples, double total,
                  double positive) {
    const std::size_t p = x_.cols();
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    Shuffle(order.begin(), order.end(), rng_);

    std::vector<std::pair<double, std::size_t>> values(samples.size());
    std::vector<std::pair<int, Split>> candidates;
    int visited = 0;
    for (std::size_t f : order) {
      if (visited >= mtry_) break;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        values[s] = {x_(samples[s], f), samples[s]};
      }
      std::sort(values.begin(), values.end());
      if (values.front().first == values.back().first) continue;
      ++visited;
      Split best;
      double left_w = 0.0;
      double left_pos = 0.0;
      for (std::size_t s = 0; s + 1 < values.size(); ++s) {
        const std::size_t i = values[s].second;
        left_w += weight_[i];
        left_pos += weight_[i] * y_[i];
        if (values[s].first == values[s + 1].first) continue;
        if (s + 1 < static_cast<std::size_t>(options_.min_leaf) ||
            values.size() - s - 1 < static_cast<std::size_t>(options_.min_leaf)) {
          continue;
        }
        const double right_w = total - left_w;
        const double right_pos = positive - left_pos;
        // Maximizing sum_k n_k * (1 - gini_k) lowered to sum of p^2 terms is
        // equivalent to maximizing the impurity decrease.
        const double score =
            (left_pos * left_pos + (left_w - left_pos) * (left_w - left_pos)) /
                left_w +
            (right_pos * right_pos +
             (right_w - right_pos) * (right_w - right_pos)) /
                right_w;
        if (score > best.score + 1e-12 * total) {
          best.score = score;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (values[s].first + values[s + 1].first);
        }
      }
      if (best.feature >= 0) candidates.emplace_back(static_cast<int>(f), best);
    }
    Split best;
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [f, s] : candidates) {
      if (s.score > best.score + 1e-12 * total) best = s;
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> weight_;
  const ForestOptions& options_;
  int mtry_;
  Rng& rng_;
  Tree tree_;
};

// ---------------------------------------------------------------------------
// Second-order regression trees on logistic gradients, grown level by level
// over presorted feature columns.

class BoostTreeBuilder {
 public:
  BoostTreeBuilder(const Matrix& x,
                   const std::vector<std::vector<std::size_t>>& sorted,
                   const GbmOptions& options)
      : x_(x), sorted_(sorted), options_(options) {}

  // Returns the tree; `leaf_of[i]` receives the leaf node of row i.
  Tree Build(std::span<const double> grad, std::span<const double> hess,
             std::vector<int>& leaf_of) {
    const std::size_t n = x_.rows();
    Tree tree;
    tree.nodes.emplace_back();
    leaf_of.assign(n, 0);
    std::vector<int> frontier = {0};
    std::vector<double> node_g(1, 0.0);
    std::vector<double> node_h(1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      node_g[0] += grad[i];
      node_h[0] += hess[i];
    }
    for (int depth = 0; depth < options_.max_depth && !frontier.empty();
         ++depth) {
      const std::size_t num_nodes = tree.nodes.size();
      std::vector<int> slot(num_nodes, -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        slot[frontier[s]] = static_cast<int>(s);
      }
      std::vector<Split> best(frontier.size());
      std::vector<double> acc_g(frontier.size());
      std::vector<double> acc_h(frontier.size());
      std::vector<double> last(frontier.size());
      std::vector<std::uint8_t> seen(frontier.size());
      for (std::size_t f = 0; f < x_.cols(); ++f) {
        std::fill(acc_g.begin(), acc_g.end(), 0.0);
        std::fill(acc_h.begin(), acc_h.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t i : sorted_[f]) {
          const int s = slot[leaf_of[i]];
          if (s < 0) continue;
          const double v = x_(i, f);
          if (seen[s] && v > last[s]) {
            const double gl = acc_g[s];
            const double hl = acc_h[s];
            const double gr = node_g[frontier[s]] - gl;
            const double hr = node_h[frontier[s]] - hl;
            if (hl >= options_.min_child_weight &&
                hr >= options_.min_child_weight) {
              const double score = gl * gl / (hl + options_.lambda) +
                                   gr * gr / (hr + options_.lambda);
              if (score > best[s].score) {
                best[s].score = score;
                best[s].feature = static_cast<int>(f);
                best[s].threshold = 0.5 * (last[s] + v);
              }
            }
          }
          seen[s] = 1;
          last[s] = v;
          acc_g[s] += grad[i];
          acc_h[s] += hess[i];
        }
      }
      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const int id = frontier[s];
        const double parent = node_g[id] * node_g[id] /
                              (node_h[id] + options_.lambda);
        if (best[s].feature < 0 || best[s].score - parent <= 1e-12) continue;
        tree.nodes[id].feature = best[s].feature;
        tree.nodes[id].threshold = best[s].threshold;
        tree.nodes[id].left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[id].right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        next.push_back(tree.nodes[id].left);
        next.push_back(tree.nodes[id].right);
      }
      if (next.empty()) break;
      node_g.assign(tree.nodes.size(), 0.0);
      node_h.assign(tree.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& node = tree.nodes[leaf_of[i]];
        if (node.feature >= 0) {
          leaf_of[i] = x_(i, node.feature) <= node.threshold ? node.left
                                                              : node.right;
        }
        node_g[leaf_of[i]] += grad[i];
        node_h[leaf_of[i]] += hess[i];
      }
      frontier = std::move(next);
    }
    // Leaf weights -G / (H + lambda).
    std::vector<double> g(tree.nodes.size(), 0.0);
    std::vector<double> h(tree.nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      g[leaf_of[i]] += grad[i];
      h[leaf_of[i]] += hess[i];
    }
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      if (tree.nodes[id].feature < 0) {
        tree.nodes[id].value = -g[id] / (h[id] + options_.lambda);
      }
    }
    return tree;
  }

 private:
  const Matrix& x_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const GbmOptions& options_;
};

}  // namespace

double Tree::Predict(std::span<const double> x) const {
  int id = 0;
  while (nodes[id].feature >= 0) {
    id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left
                                                     : nodes[id].right;
  }
  return nodes[id].value;
}

int Tree::Depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int max_depth = 0;
  // Children always follow their parent in the node array.
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    max_depth = std::max(max_depth, depth[id]);
    if (nodes[id].feature >= 0) {
      depth[nodes[id].left] = depth[id] + 1;
      depth[nodes[id].right] = depth[id] + 1;
    }
  }
  return max_depth;
}

Tree Tree::Leaf(double value) {
  Tree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, value});
  return t;
}

int DefaultMtry(std::size_t num_features) {
  return std::max(1, static_cast<int>(std::floor(
                         std::sqrt(static_cast<double>(num_features)))));
}

double Forest::Probability(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.Predict(x);
  return trees.empty() ? 0.5 : sum / static_cast<double>(trees.size());
}

Forest RfFit(const Matrix& x, std::span<const int> y,
             const ForestOptions& options) {
  CheckBinaryLabels(y, x.rows());
  CheckFinite(x);
  if (options.n_trees < 1 || options.max_depth < 0 || options.min_leaf < 1) {
    throw Error(ErrorCode::kConfig,
                "forest needs n_trees >= 1, max_depth >= 0, min_leaf >= 1");
  }
  Forest forest;
  forest.num_features = x.cols();
  forest.max_depth = options.max_depth;
  forest.mtry = options.mtry > 0
                    ? std::min<int>(options.mtry, static_cast<int>(x.cols()))
                    : DefaultMtry(x.cols());
  const std::size_t n = x.rows();
  std::vector<double> weight(n);
  for (int t = 0; t < options.n_trees; ++t) {
    const std::uint64_t seed = DeriveSeed(options.seed, t);
    Rng rng(seed);
    std::fill(weight.begin(), weight.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) weight[UniformIndex(rng, n)] += 1.0;
    GiniTreeBuilder builder(x, y, weight, options, forest.mtry, rng);
    forest.trees.push_back(builder.Build());
    forest.tree_seeds.push_back(seed);
  }
  return forest;
}

double BoostedEnsemble::LogOdds(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.Predict(x);
  return base_score + learning_rate * sum;
}

double BoostedEnsemble::Probability(std::span<const double> x) const {
  return Sigmoid(LogOdds(x));
}

BoostedEnsemble GbmFit(const Matrix& x, std::span<const int> y,
                       const GbmOptions& options,
                       FitDiagnostics* diagnostics) {
  CheckBinaryLabels(y, x.rows());
  CheckFinite(x);
  if (options.n_rounds < 0 || options.max_depth < 0 ||
      !(options.learning_rate > 0.0) || !(options.lambda >= 0.0)) {
    throw Error(ErrorCode::kConfig, "invalid boosting options");
  }
  const std::size_t n = x.rows();
  BoostedEnsemble model;
  model.learning_rate = options.learning_rate;
  model.num_features = x.cols();
  double pos = 0.0;
  for (int v : y) pos += v;
  const double mean = pos / static_cast<double>(n);
  model.base_score = std::log(mean / (1.0 - mean));

  std::vector<std::vector<std::size_t>> sorted(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    sorted[f].resize(n);
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) {
                       return x(a, f) < x(b, f);
                     });
  }

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<double> trial(n);
  std::vector<int> leaf_of;
  FitDiagnostics local;
  FitDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = FitDiagnostics{};
  double loss = LogLoss(margin, y);
  diag.objective_trace.push_back(loss);
  BoostTreeBuilder builder(x, sorted, options);
  for (int round = 0; round < options.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(margin[i]);
      grad[i] = p - y[i];
      hess[i] = p * (1.0 - p);
    }
    Tree tree = builder.Build(grad, hess, leaf_of);
    // Shrink the tree until the training loss does not increase; the leaf
    // values keep the shrink so prediction stays base + lr * sum(trees).
    double scale = 1.0;
    double trial_loss = loss;
    for (int attempt = 0; attempt < 40; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = margin[i] + options.learning_rate * scale *
                                   tree.nodes[leaf_of[i]].value;
      }
      trial_loss = LogLoss(trial, y);
      if (trial_loss <= loss) break;
      scale *= 0.5;
    }
    if (trial_loss > loss) {
      scale = 0.0;
      trial_loss = loss;
      trial = margin;
    }
    if (scale != 1.0) {
      for (auto& node : tree.nodes) {
        if (node.feature < 0) node.value *= scale;
      }
    }
    margin.swap(trial);
    loss = trial_loss;
    diag.objective_trace.push_back(loss);
    model.trees.push_back(std::move(tree));
  }
  diag.iterations = options.n_rounds;
  diag.converged = true;
  diag.final_residual = loss;
  return model;
}

}  // namespace locust_sdm::models
