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

// nu one-class SVM solved in the scaled dual
//
//   min 1/2 a^T Q a   s.t.  0 <= a_i <= 1,  sum_i a_i = nu * n,
//
// with Q the RBF Gram matrix, by SMO on maximal-violating pairs with
// second-order working-set selection. The solution is divided by nu * n at
// the end so that the stored alphas sum to one.

#include <algorithm>
#include <cmath>
#include <limits>

#include "locust_sdm/errors.h"
#include "locust_sdm/models.h"

namespace locust_sdm::models {

namespace {

constexpr double kTau = 1e-12;

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    d += t * t;
  }
  return d;
}

}  // namespace

double OcsvmModel::Decision(std::span<const double> x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < support_vectors.rows(); ++i) {
    sum += alphas[i] *
           std::exp(-gamma * SquaredDistance(support_vectors.row(i), x));
  }
  return sum - rho;
}

double DefaultGamma(const Matrix& x) {
  double mean = 0.0;
  for (double v : x.data()) mean += v;
  mean /= static_cast<double>(x.data().size());
  double var = 0.0;
  for (double v : x.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.data().size());
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

OcsvmModel OcsvmFit(const Matrix& x, const OcsvmOptions& options,
                    FitDiagnostics* diagnostics) {
  if (!(options.nu > 0.0 && options.nu <= 1.0)) {
    throw Error(ErrorCode::kConfig, "nu must lie in (0, 1]");
  }
  if (options.gamma < 0.0 || !std::isfinite(options.gamma)) {
    throw Error(ErrorCode::kConfig, "gamma must be positive");
  }
  if (x.rows() < 2 || x.cols() == 0) {
    throw Error(ErrorCode::kConfig, "one-class SVM needs >= 2 rows");
  }
  CheckFinite(x);
  const std::size_t n = x.rows();
  const double gamma = options.gamma > 0.0 ? options.gamma : DefaultGamma(x);

  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i * n + i] = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double k = std::exp(-gamma * SquaredDistance(x.row(i), x.row(j)));
      q[i * n + j] = k;
      q[j * n + i] = k;
    }
  }

  const double total = options.nu * static_cast<double>(n);
  std::vector<double> alpha(n, 0.0);
  const auto n_full = static_cast<std::size_t>(std::floor(total));
  for (std::size_t i = 0; i < std::min(n_full, n); ++i) alpha[i] = 1.0;
  if (n_full < n) alpha[n_full] = total - static_cast<double>(n_full);

  std::vector<double> grad(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (alpha[j] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) grad[i] += q[i * n + j] * alpha[j];
  }

  long long iter = 0;
  double gap = 0.0;
  for (; iter < options.max_iter; ++iter) {
    // i maximizes -G over variables that can increase.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i_sel = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] < 1.0 && -grad[t] >= gmax) {
        gmax = -grad[t];
        i_sel = t;
      }
    }
    // j minimizes the second-order objective decrease over variables that
    // can decrease.
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j_sel = n;
    double obj_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] <= 0.0) continue;
      gmax2 = std::max(gmax2, grad[t]);
      if (i_sel == n) continue;
      const double diff = gmax + grad[t];
      if (diff > 0.0) {
        double quad = 2.0 - 2.0 * q[i_sel * n + t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -diff * diff / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j_sel = t;
        }
      }
    }
    gap = gmax + gmax2;
    if (i_sel == n || j_sel == n || gap < options.tol) break;

    const std::size_t i = i_sel;
    const std::size_t j = j_sel;
    double quad = 2.0 - 2.0 * q[i * n + j];
    if (quad <= 0.0) quad = kTau;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double delta = (grad[j] - grad[i]) / quad;
    const double sum = old_i + old_j;
    double new_i = old_i + delta;
    double new_j = old_j - delta;
    if (new_i > 1.0) {
      new_i = 1.0;
      new_j = sum - 1.0;
    }
    if (new_j < 0.0) {
      new_j = 0.0;
      new_i = sum;
    }
    if (new_j > 1.0) {
      new_j = 1.0;
      new_i = sum - 1.0;
    }
    if (new_i < 0.0) {
      new_i = 0.0;
      new_j = sum;
    }
    alpha[i] = new_i;
    alpha[j] = new_j;
    const double di = new_i - old_i;
    const double dj = new_j - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
    }
  }

  // Normalize first, then recompute the gradient with the stored alphas in
  // the order Decision() sums them, so boundary points score exactly rho.
  OcsvmModel model;
  model.gamma = gamma;
  model.nu = options.nu;
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) sv.push_back(t);
  }
  model.support_vectors = x.SelectRows(sv);
  for (std::size_t t : sv) model.alphas.push_back(alpha[t] / total);
  std::vector<double> score(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < sv.size(); ++k) {
      score[t] += model.alphas[k] * q[t * n + sv[k]];
    }
  }

  // rho from free variables; otherwise the midpoint of the feasible range.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_shift = 0.0;
  double free_ref = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] >= 1.0) {
      lower = std::max(lower, score[t]);
    } else if (alpha[t] <= 0.0) {
      upper = std::min(upper, score[t]);
    } else {
      // Averaged as offsets from the first free score, which keeps equal
      // scores exact.
      if (n_free == 0) free_ref = score[t];
      free_shift += score[t] - free_ref;
      ++n_free;
    }
  }
  if (n_free > 0) {
    model.rho = free_ref + free_shift / static_cast<double>(n_free);
  } else if (std::isfinite(upper) && std::isfinite(lower)) {
    model.rho = 0.5 * (upper + lower);
  } else {
    model.rho = std::isfinite(upper) ? upper : lower;
  }
  if (diagnostics) {
    *diagnostics = FitDiagnostics{};
    diagnostics->iterations = static_cast<int>(std::min<long long>(
        iter, std::numeric_limits<int>::max()));
    diagnostics->converged = gap < options.tol;
    diagnostics->final_residual = gap / total;
  }
  return model;
}

}  // namespace locust_sdm::models
