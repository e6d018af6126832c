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

// Classifiers: L2-regularized logistic regression, a Gini random forest,
// second-order gradient-boosted trees, a nu one-class SVM and a linear
// presence-background MaxEnt model. All of them implement the same
// probability / classify contract through TrainedModel.

#ifndef LOCUST_SDM_MODELS_H_
#define LOCUST_SDM_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "locust_sdm/matrix.h"

namespace locust_sdm::models {

// Optional convergence record filled in by the fitting routines.
struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  // Per-iteration objective: training log-loss per boosting round, the
  // penalized MaxEnt objective per accepted step, the LR objective per
  // Newton step.
  std::vector<double> objective_trace;
  // Final optimality measure (gradient max-norm, KKT gap, ...).
  double final_residual = 0.0;
};

// ---------------------------------------------------------------------------
// Logistic regression.

struct LrOptions {
  double l2 = 1e-4;
  double tol = 1e-8;
  int max_iter = 200;
};

struct LinearModel {
  // Weights act on standardized features (x - mean) / std.
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;

  std::size_t num_features() const { return weights.size(); }
  double LogOdds(std::span<const double> x) const;
  double Probability(std::span<const double> x) const;
};

// Mean logistic loss + l2 * |w|^2 / 2 over already standardized rows, with
// its analytic gradient. Exposed for finite-difference checks.
class LogisticObjective {
 public:
  LogisticObjective(const Matrix& z, std::span<const int> y, double l2)
      : z_(z), y_(y), l2_(l2) {}

  double Value(std::span<const double> w, double b) const;
  // grad_w has the length of w.
  void Gradient(std::span<const double> w, double b, std::span<double> grad_w,
                double& grad_b) const;

 private:
  const Matrix& z_;
  std::span<const int> y_;
  double l2_;
};

// Throws Error(kSingleClass) when y is constant and Error(kNonFinite) on
// non-finite inputs. Constant columns get std 1 and weight 0.
LinearModel LrFit(const Matrix& x, std::span<const int> y,
                  const LrOptions& options = {},
                  FitDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// Trees.

struct TreeNode {
  int feature = -1;  // -1 marks a leaf.
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] > threshold
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root.

  double Predict(std::span<const double> x) const;
  int Depth() const;
  // Constant tree with a single leaf.
  static Tree Leaf(double value);
};

struct ForestOptions {
  int n_trees = 200;
  int max_depth = 15;
  int mtry = 0;  // 0 selects floor(sqrt(p)).
  int min_leaf = 1;
  std::uint64_t seed = 0;
};

int DefaultMtry(std::size_t num_features);

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> tree_seeds;
  int mtry = 1;
  int max_depth = 15;
  std::size_t num_features = 0;

  // Mean of tree leaf probabilities.
  double Probability(std::span<const double> x) const;
};

Forest RfFit(const Matrix& x, std::span<const int> y,
             const ForestOptions& options = {});

struct GbmOptions {
  int n_rounds = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  double lambda = 1.0;  // leaf L2 regularizer
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;
};

struct BoostedEnsemble {
  std::vector<Tree> trees;  // log-odds contributions
  double learning_rate = 0.1;
  double base_score = 0.0;
  std::size_t num_features = 0;

  double LogOdds(std::span<const double> x) const;
  double Probability(std::span<const double> x) const;
};

// diagnostics->objective_trace holds the training log-loss before round 1
// and after every round.
BoostedEnsemble GbmFit(const Matrix& x, std::span<const int> y,
                       const GbmOptions& options = {},
                       FitDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// One-class SVM.

struct OcsvmOptions {
  double nu = 0.5;
  double gamma = 0.0;  // <= 0 selects 1 / (d * var(X)).
  double tol = 1e-4;
  long long max_iter = 10'000'000;
};

struct OcsvmModel {
  Matrix support_vectors;
  std::vector<double> alphas;  // sums to 1
  double rho = 0.0;
  double gamma = 1.0;
  double nu = 0.5;

  std::size_t num_features() const { return support_vectors.cols(); }
  // sum_i alpha_i exp(-gamma |x - sv_i|^2) - rho; negative outside the
  // estimated support.
  double Decision(std::span<const double> x) const;
};

double DefaultGamma(const Matrix& x);

// Throws Error(kConfig) for nu outside (0, 1], gamma < 0 or fewer than 2
// rows. diagnostics->final_residual is the KKT gap on the normalized scale.
OcsvmModel OcsvmFit(const Matrix& x, const OcsvmOptions& options = {},
                    FitDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// MaxEnt with the linear feature class.

struct MaxentOptions {
  double reg_factor = 1.0;
  double tol = 1e-7;
  int max_iter = 20000;
};

struct MaxentModel {
  std::vector<double> betas;  // on background-standardized features
  double reg_factor = 1.0;
  std::vector<double> background_mean;
  std::vector<double> background_std;
  double log_partition = 0.0;  // log sum_b exp(eta(b)) over the fit background
  std::size_t n_background = 0;
  bool converged = true;

  std::size_t num_features() const { return betas.size(); }
  double Eta(std::span<const double> x) const;
  // Complementary log-log transform 1 - exp(-exp(eta - log_partition +
  // log n_background)).
  double Probability(std::span<const double> x) const;
};

// Penalized log-likelihood maximized by the fit; exposed for tests.
double MaxentObjective(const Matrix& presence_z, const Matrix& background_z,
                       std::span<const double> betas,
                       std::span<const double> penalties);

MaxentModel MaxentFit(const Matrix& presence_x, const Matrix& background_x,
                      const MaxentOptions& options = {},
                      FitDiagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// Shared contract.

using AnyModel =
    std::variant<LinearModel, Forest, BoostedEnsemble, OcsvmModel, MaxentModel>;

std::string_view ModelKind(const AnyModel& model);

struct TrainedModel {
  std::vector<std::string> schema;
  AnyModel model;
};

std::size_t NumFeatures(const AnyModel& model);

// Probability of the positive class for one row. For the one-class SVM this
// is sigmoid(decision), so p >= 0.5 exactly on the estimated support.
double Probability(const AnyModel& model, std::span<const double> x);

// Throw Error(kSchemaMismatch) when the column count differs from the
// model's feature count.
std::vector<double> PredictProba(const AnyModel& model, const Matrix& x);
std::vector<double> PredictProba(const TrainedModel& model, const Matrix& x);
// p >= threshold maps to 1.
std::vector<int> Classify(const AnyModel& model, const Matrix& x,
                          double threshold = 0.5);

// Line-oriented text format with every real printed to 17 significant
// digits, so save -> load -> predict is bit-stable.
void SaveModel(std::ostream& out, const TrainedModel& model);
TrainedModel LoadModel(std::istream& in);
void SaveModelFile(const std::filesystem::path& path, const TrainedModel& model,
                   const std::string& provenance = {});
TrainedModel LoadModelFile(const std::filesystem::path& path);

// Shared input validation used by all fitting routines.
void CheckFinite(const Matrix& x);
void CheckBinaryLabels(std::span<const int> y, std::size_t rows);

}  // namespace locust_sdm::models

#endif  // LOCUST_SDM_MODELS_H_
