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

// Shapley attributions on the log-odds scale.

#ifndef LOCUST_SDM_EXPLAIN_H_
#define LOCUST_SDM_EXPLAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "locust_sdm/matrix.h"
#include "locust_sdm/models.h"

namespace locust_sdm::explain {

struct Attribution {
  std::vector<double> phi;
  double base_value = 0.0;  // expected output over the background
  std::vector<double> input;
  // Monte Carlo standard error per feature; empty for exact methods.
  std::vector<double> standard_error;
};

// Scalar model output explained by the generic estimators.
using OutputFn = std::function<double(std::span<const double> x)>;

// Log-odds of the model's probability. Exact for LR and boosting, logit of
// the clamped probability for the rest.
double Margin(const models::AnyModel& model, std::span<const double> x);
OutputFn MarginOf(const models::AnyModel& model);

// Closed form: phi_j = w_j * (z_j - mean_j(z_background)) with z the
// standardized input, base = log-odds at the background mean. Throws
// Error(kSchemaMismatch) on width mismatch and Error(kEmptyEvaluation) on an
// empty background.
Attribution LinearShap(const models::LinearModel& model,
                       const Matrix& background, std::span<const double> x);

// Permutation sampling with marginal replacement from background rows.
// Background rows are cycled in shuffled passes and permutations come in
// reversed pairs, both to cut variance. Deterministic per seed.
Attribution SamplingShap(const OutputFn& f, const Matrix& background,
                         std::span<const double> x, int n_permutations,
                         std::uint64_t seed);
Attribution SamplingShap(const models::AnyModel& model, const Matrix& background,
                         std::span<const double> x, int n_permutations,
                         std::uint64_t seed);

// Exact Shapley values by enumerating all 2^d coalitions, with the value of
// a coalition averaged over background rows. Throws Error(kConfig) for
// d > 20.
Attribution BruteForceShap(const OutputFn& f, const Matrix& background,
                           std::span<const double> x);

struct RankedFeature {
  std::size_t index = 0;
  std::string name;
  double mean_abs_phi = 0.0;
  double cum_share = 0.0;  // share of the total mean |phi| up to this row
};

// Descending mean |phi|, ties in feature order. `names` may be empty.
// Throws Error(kEmptyEvaluation) without attributions.
std::vector<RankedFeature> RankFeatures(std::span<const Attribution> attributions,
                                        const std::vector<std::string>& names = {});

// feature,phi
void ExportAttribution(const std::filesystem::path& path,
                       const Attribution& attribution,
                       const std::vector<std::string>& names,
                       const std::string& provenance = {});
// feature,mean_abs_phi,cum_share
void ExportRanking(const std::filesystem::path& path,
                   std::span<const RankedFeature> ranking,
                   const std::string& provenance = {});

}  // namespace locust_sdm::explain

#endif  // LOCUST_SDM_EXPLAIN_H_
