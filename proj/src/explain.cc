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

#include "locust_sdm/explain.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/random.h"

namespace locust_sdm::explain {

namespace {

void CheckInputs(const Matrix& background, std::span<const double> x) {
  if (background.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation, "empty background");
  }
  if (background.cols() != x.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "background has " + std::to_string(background.cols()) +
                    " columns, input has " + std::to_string(x.size()));
  }
}

double BackgroundMeanOutput(const OutputFn& f, const Matrix& background) {
  double sum = 0.0;
  for (std::size_t b = 0; b < background.rows(); ++b) sum += f(background.row(b));
  return sum / static_cast<double>(background.rows());
}

}  // namespace

double Margin(const models::AnyModel& model, std::span<const double> x) {
  if (const auto* lr = std::get_if<models::LinearModel>(&model)) return lr->LogOdds(x);
  if (const auto* gbm = std::get_if<models::BoostedEnsemble>(&model)) {
    return gbm->LogOdds(x);
  }
  const double p = std::clamp(models::Probability(model, x), 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

OutputFn MarginOf(const models::AnyModel& model) {
  return [&model](std::span<const double> x) { return Margin(model, x); };
}

Attribution LinearShap(const models::LinearModel& model, const Matrix& background,
                       std::span<const double> x) {
  CheckInputs(background, x);
  const std::size_t d = x.size();
  if (model.num_features() != d) {
    throw Error(ErrorCode::kSchemaMismatch, "model and input widths differ");
  }
  std::vector<double> mean(d, 0.0);
  for (std::size_t b = 0; b < background.rows(); ++b) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += background(b, j);
  }
  for (double& m : mean) m /= static_cast<double>(background.rows());

  Attribution a;
  a.input.assign(x.begin(), x.end());
  a.phi.resize(d);
  a.base_value = model.LogOdds(mean);
  for (std::size_t j = 0; j < d; ++j) {
    a.phi[j] = model.weights[j] * (x[j] - mean[j]) / model.feature_stds[j];
  }
  return a;
}

Attribution SamplingShap(const OutputFn& f, const Matrix& background,
                         std::span<const double> x, int n_permutations,
                         std::uint64_t seed) {
  CheckInputs(background, x);
  if (n_permutations < 1) {
    throw Error(ErrorCode::kConfig, "n_permutations must be >= 1");
  }
  const std::size_t d = x.size();
  const std::size_t nb = background.rows();
  Rng rng(seed);
  std::vector<std::size_t> rows(nb);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  std::vector<double> z(d);

  std::size_t cursor = nb;
  for (int t = 0; t < n_permutations; ++t) {
    if (cursor == nb) {
      Shuffle(rows.begin(), rows.end(), rng);
      cursor = 0;
    }
    const std::size_t b = rows[cursor++];
    if (t % 2 == 0) {
      Shuffle(perm.begin(), perm.end(), rng);
    } else {
      std::reverse(perm.begin(), perm.end());
    }
    std::copy(background.row(b).begin(), background.row(b).end(), z.begin());
    double prev = f(z);
    for (std::size_t j : perm) {
      z[j] = x[j];
      const double cur = f(z);
      const double delta = cur - prev;
      sum[j] += delta;
      sum_sq[j] += delta * delta;
      prev = cur;
    }
  }

  Attribution a;
  a.input.assign(x.begin(), x.end());
  a.base_value = BackgroundMeanOutput(f, background);
  a.phi.resize(d);
  a.standard_error.resize(d);
  const double n = n_permutations;
  for (std::size_t j = 0; j < d; ++j) {
    a.phi[j] = sum[j] / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq[j] - n * a.phi[j] * a.phi[j]) / (n - 1)) : 0.0;
    a.standard_error[j] = std::sqrt(var / n);
  }
  return a;
}

Attribution SamplingShap(const models::AnyModel& model, const Matrix& background,
                         std::span<const double> x, int n_permutations,
                         std::uint64_t seed) {
  if (models::NumFeatures(model) != x.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "model and input widths differ");
  }
  return SamplingShap(MarginOf(model), background, x, n_permutations, seed);
}

Attribution BruteForceShap(const OutputFn& f, const Matrix& background,
                           std::span<const double> x) {
  CheckInputs(background, x);
  const std::size_t d = x.size();
  if (d > 20) throw Error(ErrorCode::kConfig, "coalition enumeration limited to 20 features");
  const std::size_t n_sets = std::size_t{1} << d;
  std::vector<double> value(n_sets, 0.0);
  std::vector<double> z(d);
  for (std::size_t s = 0; s < n_sets; ++s) {
    double total = 0.0;
    for (std::size_t b = 0; b < background.rows(); ++b) {
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = (s >> j) & 1 ? x[j] : background(b, j);
      }
      total += f(z);
    }
    value[s] = total / static_cast<double>(background.rows());
  }
  // weight(|S|) = |S|! (d - |S| - 1)! / d!
  std::vector<double> weight(d);
  for (std::size_t k = 0; k < d; ++k) {
    weight[k] = std::exp(std::lgamma(k + 1.0) + std::lgamma(static_cast<double>(d - k)) -
                         std::lgamma(d + 1.0));
  }
  Attribution a;
  a.input.assign(x.begin(), x.end());
  a.base_value = value[0];
  a.phi.assign(d, 0.0);
  for (std::size_t s = 0; s < n_sets; ++s) {
    const auto size = static_cast<std::size_t>(std::popcount(s));
    for (std::size_t j = 0; j < d; ++j) {
      if ((s >> j) & 1) continue;
      a.phi[j] += weight[size] * (value[s | (std::size_t{1} << j)] - value[s]);
    }
  }
  return a;
}

std::vector<RankedFeature> RankFeatures(std::span<const Attribution> attributions,
                                        const std::vector<std::string>& names) {
  if (attributions.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation, "no attributions to rank");
  }
  const std::size_t d = attributions.front().phi.size();
  if (!names.empty() && names.size() != d) {
    throw Error(ErrorCode::kSchemaMismatch, "feature names do not match attributions");
  }
  std::vector<RankedFeature> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    out[j].index = j;
    out[j].name = names.empty() ? "f" + std::to_string(j + 1) : names[j];
  }
  for (const Attribution& a : attributions) {
    if (a.phi.size() != d) {
      throw Error(ErrorCode::kSchemaMismatch, "attributions differ in width");
    }
    for (std::size_t j = 0; j < d; ++j) out[j].mean_abs_phi += std::abs(a.phi[j]);
  }
  double total = 0.0;
  for (auto& r : out) {
    r.mean_abs_phi /= static_cast<double>(attributions.size());
    total += r.mean_abs_phi;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.mean_abs_phi > b.mean_abs_phi;
  });
  double running = 0.0;
  for (auto& r : out) {
    running += r.mean_abs_phi;
    r.cum_share = total > 0.0 ? running / total : 0.0;
  }
  return out;
}

void ExportAttribution(const std::filesystem::path& path,
                       const Attribution& attribution,
                       const std::vector<std::string>& names,
                       const std::string& provenance) {
  if (names.size() != attribution.phi.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "feature names do not match attribution");
  }
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "# base_value " << FormatDouble(attribution.base_value) << '\n';
    out << "feature,phi\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
      out << names[j] << ',' << FormatDouble(attribution.phi[j]) << '\n';
    }
  });
}

void ExportRanking(const std::filesystem::path& path,
                   std::span<const RankedFeature> ranking,
                   const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "feature,mean_abs_phi,cum_share\n";
    for (const RankedFeature& r : ranking) {
      out << r.name << ',' << FormatDouble(r.mean_abs_phi) << ','
          << FormatDouble(r.cum_share) << '\n';
    }
  });
}

}  // namespace locust_sdm::explain
