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

// Linear-feature MaxEnt. The fitted distribution over background rows is
// q(b) = exp(eta(b)) / Z with eta(x) = beta . z(x), and beta maximizes
//
//   mean_p eta(x_p) - log Z - reg_factor * sum_j lambda_j |beta_j|,
//
// lambda_j = sd_j(presences) / sqrt(n_presences), by proximal gradient
// ascent with backtracking.

#include <algorithm>
#include <cmath>
#include <limits>

#include "locust_sdm/errors.h"
#include "locust_sdm/models.h"

namespace locust_sdm::models {

namespace {

double LogSumExp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double SoftThreshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Smooth part of the objective and its gradient.
double SmoothValue(const Matrix& pz, const Matrix& bz,
                   std::span<const double> beta, std::vector<double>& eta_b) {
  const std::size_t p = beta.size();
  double mean_eta = 0.0;
  for (std::size_t i = 0; i < pz.rows(); ++i) {
    const auto row = pz.row(i);
    for (std::size_t j = 0; j < p; ++j) mean_eta += beta[j] * row[j];
  }
  mean_eta /= static_cast<double>(pz.rows());
  eta_b.resize(bz.rows());
  for (std::size_t i = 0; i < bz.rows(); ++i) {
    const auto row = bz.row(i);
    double e = 0.0;
    for (std::size_t j = 0; j < p; ++j) e += beta[j] * row[j];
    eta_b[i] = e;
  }
  return mean_eta - LogSumExp(eta_b);
}

void SmoothGradient(const std::vector<double>& presence_mean, const Matrix& bz,
                    const std::vector<double>& eta_b,
                    std::vector<double>& grad) {
  const double log_z = LogSumExp(eta_b);
  grad = presence_mean;
  for (std::size_t i = 0; i < bz.rows(); ++i) {
    const double w = std::exp(eta_b[i] - log_z);
    const auto row = bz.row(i);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] -= w * row[j];
  }
}

double Penalty(std::span<const double> beta, std::span<const double> lambda) {
  double s = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) s += lambda[j] * std::abs(beta[j]);
  return s;
}

}  // namespace

double MaxentModel::Eta(std::span<const double> x) const {
  double e = 0.0;
  for (std::size_t j = 0; j < betas.size(); ++j) {
    if (betas[j] != 0.0) {
      e += betas[j] * (x[j] - background_mean[j]) / background_std[j];
    }
  }
  return e;
}

double MaxentModel::Probability(std::span<const double> x) const {
  const double raw = Eta(x) - log_partition +
                     std::log(static_cast<double>(n_background));
  return -std::expm1(-std::exp(raw));
}

double MaxentObjective(const Matrix& presence_z, const Matrix& background_z,
                       std::span<const double> betas,
                       std::span<const double> penalties) {
  std::vector<double> eta_b;
  return SmoothValue(presence_z, background_z, betas, eta_b) -
         Penalty(betas, penalties);
}

MaxentModel MaxentFit(const Matrix& presence_x, const Matrix& background_x,
                      const MaxentOptions& options,
                      FitDiagnostics* diagnostics) {
  if (presence_x.rows() < 1 || background_x.rows() < 2) {
    throw Error(ErrorCode::kConfig,
                "MaxEnt needs >= 1 presence and >= 2 background rows");
  }
  if (presence_x.cols() != background_x.cols()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "presence and background column counts differ");
  }
  if (!(options.reg_factor >= 0.0) || !(options.tol > 0.0)) {
    throw Error(ErrorCode::kConfig, "MaxEnt needs reg_factor >= 0, tol > 0");
  }
  CheckFinite(presence_x);
  CheckFinite(background_x);
  const std::size_t p = presence_x.cols();
  const std::size_t nb = background_x.rows();
  const std::size_t np = presence_x.rows();

  MaxentModel model;
  model.reg_factor = options.reg_factor;
  model.n_background = nb;
  model.background_mean.assign(p, 0.0);
  model.background_std.assign(p, 1.0);
  std::vector<std::uint8_t> active(p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < nb; ++i) mean += background_x(i, j);
    mean /= static_cast<double>(nb);
    double var = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
      var += (background_x(i, j) - mean) * (background_x(i, j) - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(nb));
    model.background_mean[j] = mean;
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      model.background_std[j] = sd;
      active[j] = 1;
    }
  }
  auto standardize = [&](const Matrix& m) {
    Matrix z(m.rows(), p);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        z(i, j) = active[j] ? (m(i, j) - model.background_mean[j]) /
                                  model.background_std[j]
                            : 0.0;
      }
    }
    return z;
  };
  const Matrix pz = standardize(presence_x);
  const Matrix bz = standardize(background_x);

  std::vector<double> presence_mean(p, 0.0);
  std::vector<double> lambda(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < np; ++i) mean += pz(i, j);
    mean /= static_cast<double>(np);
    double var = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      var += (pz(i, j) - mean) * (pz(i, j) - mean);
    }
    presence_mean[j] = mean;
    lambda[j] = options.reg_factor * std::sqrt(var / static_cast<double>(np)) /
                std::sqrt(static_cast<double>(np));
  }

  FitDiagnostics local;
  FitDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = FitDiagnostics{};

  std::vector<double> beta(p, 0.0);
  std::vector<double> eta_b;
  double smooth = SmoothValue(pz, bz, beta, eta_b);
  double objective = smooth - Penalty(beta, lambda);
  diag.objective_trace.push_back(objective);
  std::vector<double> grad;
  std::vector<double> trial(p);
  std::vector<double> trial_eta;
  double step = 1.0;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    SmoothGradient(presence_mean, bz, eta_b, grad);
    bool accepted = false;
    double trial_smooth = smooth;
    double move = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      double lin = 0.0;
      double sq = 0.0;
      move = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        trial[j] = active[j] ? SoftThreshold(beta[j] + step * grad[j],
                                             step * lambda[j])
                             : 0.0;
        const double d = trial[j] - beta[j];
        lin += grad[j] * d;
        sq += d * d;
        move = std::max(move, std::abs(d));
      }
      trial_smooth = SmoothValue(pz, bz, trial, trial_eta);
      // Minorization condition for concave ascent: the quadratic lower model
      // must not overshoot the true value.
      if (trial_smooth >= smooth + lin - sq / (2.0 * step) - 1e-15) {
        const double trial_objective = trial_smooth - Penalty(trial, lambda);
        if (trial_objective >= objective - 1e-12 * std::abs(objective)) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    beta = trial;
    eta_b.swap(trial_eta);
    smooth = trial_smooth;
    objective = smooth - Penalty(beta, lambda);
    diag.objective_trace.push_back(objective);
    diag.final_residual = move / step;
    if (move / step < options.tol) {
      converged = true;
      ++iter;
      break;
    }
    step *= 1.5;
  }
  diag.iterations = iter;
  diag.converged = converged;

  model.betas = beta;
  model.converged = converged;
  // Partition over the raw background, consistent with Eta().
  std::vector<double> eta_raw(nb);
  for (std::size_t i = 0; i < nb; ++i) eta_raw[i] = model.Eta(background_x.row(i));
  model.log_partition = LogSumExp(eta_raw);
  return model;
}

}  // namespace locust_sdm::models
