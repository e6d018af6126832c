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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "locust_sdm/errors.h"
#include "locust_sdm/models.h"

namespace locust_sdm::models {

namespace {

double Sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + exp(m)) without overflow.
double Softplus(double m) {
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

}  // namespace

void CheckFinite(const Matrix& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, "design matrix has non-finite values");
    }
  }
}

void CheckBinaryLabels(std::span<const int> y, std::size_t rows) {
  if (rows == 0) {
    throw Error(ErrorCode::kSingleClass, "no training rows");
  }
  if (y.size() != rows) {
    throw Error(ErrorCode::kSchemaMismatch,
                "label count differs from row count");
  }
  bool has0 = false;
  bool has1 = false;
  for (int v : y) {
    if (v == 0) {
      has0 = true;
    } else if (v == 1) {
      has1 = true;
    } else {
      throw Error(ErrorCode::kConfig, "labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) {
    throw Error(ErrorCode::kSingleClass, "labels contain a single class");
  }
}

double LinearModel::LogOdds(std::span<const double> x) const {
  double m = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] != 0.0) {
      m += weights[j] * (x[j] - feature_means[j]) / feature_stds[j];
    }
  }
  return m;
}

double LinearModel::Probability(std::span<const double> x) const {
  return Sigmoid(LogOdds(x));
}

double LogisticObjective::Value(std::span<const double> w, double b) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < z_.rows(); ++i) {
    const auto row = z_.row(i);
    double m = b;
    for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * row[j];
    // -log p for y=1 is softplus(-m); -log(1-p) for y=0 is softplus(m).
    loss += y_[i] ? Softplus(-m) : Softplus(m);
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return loss / static_cast<double>(z_.rows()) + 0.5 * l2_ * reg;
}

void LogisticObjective::Gradient(std::span<const double> w, double b,
                                 std::span<double> grad_w,
                                 double& grad_b) const {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(z_.rows());
  for (std::size_t i = 0; i < z_.rows(); ++i) {
    const auto row = z_.row(i);
    double m = b;
    for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * row[j];
    const double r = (Sigmoid(m) - y_[i]) * inv_n;
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += r * row[j];
    grad_b += r;
  }
  for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += l2_ * w[j];
}

LinearModel LrFit(const Matrix& x, std::span<const int> y,
                  const LrOptions& options, FitDiagnostics* diagnostics) {
  CheckBinaryLabels(y, x.rows());
  CheckFinite(x);
  if (!(options.l2 > 0.0) || !(options.tol > 0.0) || options.max_iter < 1) {
    throw Error(ErrorCode::kConfig, "LR needs l2 > 0, tol > 0, max_iter >= 1");
  }
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();

  LinearModel model;
  model.weights.assign(p, 0.0);
  model.feature_means.assign(p, 0.0);
  model.feature_stds.assign(p, 1.0);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      var += (x(i, j) - mean) * (x(i, j) - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    model.feature_means[j] = mean;
    // Relative threshold: columns that are constant up to rounding.
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      model.feature_stds[j] = sd;
      active.push_back(j);
    }
  }

  const std::size_t k = active.size();
  Matrix z(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t j = active[a];
      z(i, a) = (x(i, j) - model.feature_means[j]) / model.feature_stds[j];
    }
  }
  const LogisticObjective objective(z, y, options.l2);

  std::vector<double> w(k, 0.0);
  double pos = 0.0;
  for (int v : y) pos += v;
  double b = std::log(pos / (static_cast<double>(n) - pos));
  std::vector<double> grad(k);
  double grad_b = 0.0;
  double value = objective.Value(w, b);
  FitDiagnostics local;
  FitDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = FitDiagnostics{};
  diag.objective_trace.push_back(value);

  Eigen::MatrixXd hessian(k + 1, k + 1);
  Eigen::VectorXd g(k + 1);
  std::vector<double> trial_w(k);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    objective.Gradient(w, b, grad, grad_b);
    double gmax = std::abs(grad_b);
    for (double v : grad) gmax = std::max(gmax, std::abs(v));
    diag.final_residual = gmax;
    diag.iterations = iter;
    if (gmax < options.tol) {
      diag.converged = true;
      break;
    }
    // Hessian of the mean loss: Z1^T diag(p(1-p)) Z1 / n + l2 on weights,
    // where Z1 = [Z, 1].
    hessian.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = z.row(i);
      double m = b;
      for (std::size_t a = 0; a < k; ++a) m += w[a] * row[a];
      const double pr = Sigmoid(m);
      const double h = pr * (1.0 - pr) / static_cast<double>(n);
      for (std::size_t a = 0; a < k; ++a) {
        const double ha = h * row[a];
        for (std::size_t c = 0; c <= a; ++c) hessian(a, c) += ha * row[c];
        hessian(k, a) += ha;
      }
      hessian(k, k) += h;
    }
    for (std::size_t a = 0; a < k; ++a) {
      hessian(a, a) += options.l2;
      for (std::size_t c = 0; c < a; ++c) hessian(c, a) = hessian(a, c);
      hessian(a, k) = hessian(k, a);
    }
    for (std::size_t a = 0; a < k; ++a) g(a) = grad[a];
    g(k) = grad_b;
    const Eigen::VectorXd step = hessian.ldlt().solve(-g);

    // Backtracking on the Armijo condition.
    const double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t a = 0; a < k; ++a) trial_w[a] = w[a] + t * step(a);
      const double trial_b = b + t * step(k);
      const double trial_value = objective.Value(trial_w, trial_b);
      if (trial_value <= value + 1e-4 * t * slope) {
        w = trial_w;
        b = trial_b;
        value = trial_value;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    diag.objective_trace.push_back(value);
    if (!accepted) {
      // No further decrease is representable; the gradient check above
      // reports how close we got.
      diag.iterations = iter + 1;
      break;
    }
    diag.iterations = iter + 1;
  }
  if (!diag.converged) {
    objective.Gradient(w, b, grad, grad_b);
    double gmax = std::abs(grad_b);
    for (double v : grad) gmax = std::max(gmax, std::abs(v));
    diag.final_residual = gmax;
    diag.converged = gmax < options.tol;
  }

  for (std::size_t a = 0; a < k; ++a) model.weights[active[a]] = w[a];
  model.bias = b;
  return model;
}

}  // namespace locust_sdm::models
