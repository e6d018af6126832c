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

// Rank-based comparison of experiment arms: the Friedman aligned ranks
// omnibus test, Holm step-down adjustment and paired post-hoc tests.

#ifndef LOCUST_SDM_STATS_H_
#define LOCUST_SDM_STATS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locust_sdm/eval.h"
#include "locust_sdm/matrix.h"

namespace locust_sdm::stats {

// Smallest p-value reported; anything below prints as "<2.2e-16".
inline constexpr double kMinPValue = 2.2e-16;

struct HypothesisSpec {
  std::vector<std::string> arms;  // empty selects every matrix column
  double alpha = 0.05;
  std::string metric = "accuracy";

  // Throws Error(kConfig) on duplicate arms or alpha outside (0, 1).
  void Validate() const;
};

struct TestResult {
  std::string comparison;
  std::string method;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_value = 1.0;  // adjusted where a family correction applies
  std::optional<int> df;
  bool rejected = false;  // p_value < alpha
  bool floored = false;   // p_value was raised to kMinPValue
  bool degenerate = false;
};

// Upper tail of the chi-square distribution. Throws Error(kDomain) for
// x < 0, df < 1 or non-finite x.
double ChiSquareSf(double x, int df);

// Rows are blocks (runs), columns treatments (arms). Throws Error(kConfig)
// for fewer than 2 rows or columns and Error(kNonFinite) on bad values. When
// every aligned value is equal the statistic is 0, p is 1 and the result is
// flagged degenerate.
TestResult FriedmanAlignedRanks(const Matrix& blocks, double alpha = 0.05);

// Aligned-ranks statistic alone; shared with the permutation reference.
double AlignedRanksStatistic(const Matrix& blocks);

// Share of within-block column permutations whose statistic reaches the
// observed one, (hits + 1) / (resamples + 1).
double PermutationPValue(const Matrix& blocks, int resamples, std::uint64_t seed);

// Holm step-down adjustment, returned in input order. Throws Error(kDomain)
// for p outside [0, 1].
std::vector<double> HolmAdjust(std::span<const double> p);

// Two-sided signed-rank test of x - y. Exact null distribution for fewer
// than 50 non-zero differences without ties, normal approximation with tie
// and continuity corrections otherwise. All-zero differences give p = 1,
// flagged degenerate.
TestResult WilcoxonSignedRank(std::span<const double> x,
                              std::span<const double> y, double alpha = 0.05);

// Omnibus over spec.arms, then one signed-rank test per pair with Holm
// adjustment across the family. Throws Error(kOmnibusNotRejected) unless
// the omnibus rejects or `force` is set, and Error(kMissingArm).
struct PosthocReport {
  TestResult omnibus;
  std::vector<TestResult> pairs;
};
PosthocReport PairwisePosthoc(
    const eval::ResultsMatrix& matrix, const HypothesisSpec& spec,
    const std::vector<std::pair<std::string, std::string>>& comparisons,
    bool force = false);

// Every pair of spec.arms, in column order.
std::vector<std::pair<std::string, std::string>> AllPairs(
    const std::vector<std::string>& arms);

// Arms of the focused hypothesis: lr:RS, rf:RS+, xgboost:RS+, maxent:BS.
const std::vector<std::string>& FocusedArms();

// Aligned-ranks test restricted to `arms`. Throws Error(kMissingArm).
TestResult FocusedTest(const eval::ResultsMatrix& matrix,
                       const std::vector<std::string>& arms = FocusedArms(),
                       double alpha = 0.05);

// "<2.2e-16" for floored values, shortest round-trip text otherwise.
std::string FormatPValue(const TestResult& result);

// comparison,statistic,p_raw,p_adjusted,rejected with the omnibus first.
void ExportReport(const std::filesystem::path& path, const PosthocReport& report,
                  const std::string& provenance = {});

}  // namespace locust_sdm::stats

#endif  // LOCUST_SDM_STATS_H_
