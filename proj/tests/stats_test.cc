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

#include <gtest/gtest.h>

#include "locust_sdm/random.h"
#include "locust_sdm/stats.h"
#include "test_util.h"

namespace locust_sdm::stats {
namespace {

Matrix FromRows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.AppendRow(r);
  return m;
}

Matrix RandomMatrix(std::size_t n, std::size_t k, Rng& rng) {
  Matrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) m(i, j) = StandardNormal(rng);
  }
  return m;
}

eval::ResultsMatrix Results(std::vector<std::string> arms, const Matrix& values) {
  return {"accuracy", std::move(arms), values};
}

TEST(ChiSquare, ReferenceValues) {
  // scipy.stats.chi2.sf
  EXPECT_NEAR(ChiSquareSf(3.841459, 1), 0.04999999465319563, 1e-12);
  EXPECT_NEAR(ChiSquareSf(10.0, 4), 0.04042768199451279, 1e-12);
  EXPECT_NEAR(ChiSquareSf(0.5, 3), 0.9188914116546758, 1e-12);
  EXPECT_NEAR(ChiSquareSf(80.0, 2) / 4.248354255291595e-18, 1.0, 1e-9);
  for (int df : {1, 2, 7, 30}) EXPECT_EQ(ChiSquareSf(0.0, df), 1.0);
}

TEST(ChiSquare, MonotoneAndDomain) {
  for (int df : {1, 3, 12}) {
    double prev = 1.0;
    for (double x = 0.0; x < 60.0; x += 0.25) {
      const double p = ChiSquareSf(x, df);
      EXPECT_LE(p, prev);
      prev = p;
    }
  }
  EXPECT_ERROR_CODE(ChiSquareSf(-1.0, 2), kDomain);
  EXPECT_ERROR_CODE(ChiSquareSf(1.0, 0), kDomain);
}

TEST(Friedman, ReferenceMatrix) {
  // Independent implementation of the aligned-ranks formula (scipy rankdata).
  const Matrix m = FromRows({{0.81, 0.79, 0.85},
                             {0.78, 0.80, 0.83},
                             {0.82, 0.77, 0.86},
                             {0.80, 0.81, 0.84},
                             {0.79, 0.76, 0.88}});
  const TestResult r = FriedmanAlignedRanks(m);
  EXPECT_NEAR(r.statistic, 7.1774682010902495, 1e-10);
  EXPECT_NEAR(r.p_value, 0.027633289257203496, 1e-10);
  EXPECT_EQ(r.df, 2);
  EXPECT_TRUE(r.rejected);
}

TEST(Friedman, IdenticalTreatmentsAreDegenerate) {
  const Matrix m = FromRows({{0.5, 0.5, 0.5}, {0.7, 0.7, 0.7}, {0.2, 0.2, 0.2}});
  const TestResult r = FriedmanAlignedRanks(m);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.rejected);
}

TEST(Friedman, ShiftedTreatmentRejects) {
  Rng rng(8);
  Matrix m = RandomMatrix(8, 3, rng);
  for (std::size_t i = 0; i < 8; ++i) m(i, 2) += 10.0;
  const TestResult r = FriedmanAlignedRanks(m);
  EXPECT_LT(r.p_value, 0.05);
  EXPECT_LT(PermutationPValue(m, 20000, 1), 0.05);
}

TEST(Friedman, BlockConstantsAreRemoved) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = RandomMatrix(10, 4, rng);
    Matrix shifted = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double c = 5.0 * StandardNormal(rng);
      for (std::size_t j = 0; j < m.cols(); ++j) shifted(i, j) += c;
    }
    EXPECT_NEAR(AlignedRanksStatistic(m), AlignedRanksStatistic(shifted), 1e-9);
  }
}

TEST(Friedman, AgreesWithPermutationOnLargerDesigns) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix m = RandomMatrix(30, 3, rng);
    EXPECT_NEAR(FriedmanAlignedRanks(m).p_value,
                PermutationPValue(m, 20000, 100 + trial), 0.03);
  }
}

TEST(Friedman, NullCalibration) {
  Rng rng(2026);
  int rejections = 0;
  for (int s = 0; s < 2000; ++s) {
    rejections += FriedmanAlignedRanks(RandomMatrix(20, 5, rng)).rejected;
  }
  EXPECT_NEAR(rejections / 2000.0, 0.05, 0.02);
}

TEST(Friedman, Errors) {
  EXPECT_ERROR_CODE(FriedmanAlignedRanks(FromRows({{1, 2, 3}})), kConfig);
  EXPECT_ERROR_CODE(FriedmanAlignedRanks(FromRows({{1}, {2}})), kConfig);
  EXPECT_ERROR_CODE(FriedmanAlignedRanks(FromRows({{1, NAN}, {2, 3}})), kNonFinite);
}

TEST(Holm, Examples) {
  EXPECT_EQ(HolmAdjust(std::vector<double>{0.2}), std::vector<double>{0.2});
  const auto adj = HolmAdjust(std::vector<double>{0.01, 0.04, 0.03});
  EXPECT_DOUBLE_EQ(adj[0], 0.03);
  EXPECT_DOUBLE_EQ(adj[1], 0.06);
  EXPECT_DOUBLE_EQ(adj[2], 0.06);
  EXPECT_EQ(HolmAdjust(std::vector<double>{0.6, 0.5})[0], 1.0);
  EXPECT_ERROR_CODE(HolmAdjust(std::vector<double>{1.2}), kDomain);
}

TEST(Holm, DominanceMonotonicityAndIdempotence) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(7);
    for (double& v : p) v = UniformUnit(rng) * 0.2;
    const auto adj = HolmAdjust(p);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GE(adj[i], p[i]);
      if (i > 0) EXPECT_GE(adj[order[i]], adj[order[i - 1]]);
    }
    // Re-adjusting cannot lower anything.
    const auto again = HolmAdjust(adj);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_GE(again[i], adj[i]);
  }
  // Saturated and single-member families are fixed points.
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_EQ(HolmAdjust(ones), ones);
  EXPECT_EQ(HolmAdjust(HolmAdjust(std::vector<double>{0.3})),
            std::vector<double>{0.3});
}

TEST(Wilcoxon, ExactReference) {
  // scipy.stats.wilcoxon(method="exact"): p = 0.083984375.
  const std::vector<double> x{0.12, -0.3, 0.45, 0.2, 0.33, -0.05, 0.6, 0.18, 0.27, -0.11};
  const std::vector<double> zero(x.size(), 0.0);
  const TestResult r = WilcoxonSignedRank(x, zero);
  EXPECT_EQ(r.statistic, 45.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.083984375);
}

TEST(Wilcoxon, TiedNormalApproximation) {
  // scipy.stats.wilcoxon(method="approx", correction=True).
  const std::vector<double> x{0.1, 0.1, -0.2, 0.3, 0.3, 0.3, -0.1, 0.4, 0.2, 0.5, 0.1, -0.3};
  const TestResult r = WilcoxonSignedRank(x, std::vector<double>(x.size(), 0.0));
  EXPECT_DOUBLE_EQ(r.statistic, 61.5);
  EXPECT_NEAR(r.p_value, 0.08187086988928309, 1e-12);
}

TEST(Wilcoxon, IdenticalAndOffsetColumns) {
  const std::vector<double> a{0.8, 0.82, 0.79, 0.85};
  const TestResult same = WilcoxonSignedRank(a, a);
  EXPECT_EQ(same.p_value, 1.0);
  EXPECT_TRUE(same.degenerate);
  EXPECT_FALSE(same.rejected);

  Rng rng(9);
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = 0.7 + 0.05 * StandardNormal(rng);
    x[i] = y[i] + 0.1;
  }
  const TestResult r = WilcoxonSignedRank(x, y);
  EXPECT_TRUE(r.rejected);
  // Equal magnitudes are all tied, so the normal approximation applies
  // (scipy.stats.wilcoxon on thirty copies of 0.1).
  EXPECT_NEAR(r.p_value, 4.617427956906429e-08, 1e-15);
}

TEST(Posthoc, FamilyAdjustmentAndOmnibusGate) {
  Rng rng(12);
  Matrix m(30, 3);
  for (std::size_t i = 0; i < 30; ++i) {
    const double base = 0.7 + 0.02 * StandardNormal(rng);
    m(i, 0) = base + 0.01 * StandardNormal(rng);
    m(i, 1) = base + 0.01 * StandardNormal(rng);
    m(i, 2) = base + 0.2;
  }
  const auto results = Results({"lr:RS", "lr:RSEP", "rf:RS"}, m);
  HypothesisSpec spec;
  const PosthocReport rep = PairwisePosthoc(results, spec, AllPairs(results.arms));
  ASSERT_EQ(rep.pairs.size(), 3u);
  EXPECT_TRUE(rep.omnibus.rejected);
  std::vector<double> raw;
  for (const auto& t : rep.pairs) raw.push_back(t.p_raw);
  const auto adj = HolmAdjust(raw);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rep.pairs[i].p_value, std::max(adj[i], kMinPValue));
    EXPECT_EQ(rep.pairs[i].rejected, rep.pairs[i].p_value < spec.alpha);
  }
  EXPECT_FALSE(rep.pairs[0].rejected);  // lr:RS vs lr:RSEP
  EXPECT_TRUE(rep.pairs[1].rejected);

  Matrix flat(5, 2, 0.5);
  const auto same = Results({"a:RS", "b:RS"}, flat);
  EXPECT_ERROR_CODE(PairwisePosthoc(same, spec, AllPairs(same.arms)),
                    kOmnibusNotRejected);
  const PosthocReport forced = PairwisePosthoc(same, spec, AllPairs(same.arms), true);
  EXPECT_EQ(forced.pairs[0].p_value, 1.0);
  EXPECT_ERROR_CODE(PairwisePosthoc(results, spec, {{"lr:RS", "nope"}}), kMissingArm);
}

TEST(Focused, MatchesManualSlice) {
  Rng rng(3);
  const Matrix m = RandomMatrix(12, 6, rng);
  const auto results = Results(
      {"lr:RS", "lr:RSEP", "rf:RS+", "xgboost:RS+", "rf:RS", "maxent:BS"}, m);
  const TestResult focused = FocusedTest(results);
  const TestResult manual = FriedmanAlignedRanks(
      m.SelectColumns(std::vector<std::size_t>{0, 2, 3, 5}));
  EXPECT_EQ(focused.statistic, manual.statistic);
  EXPECT_EQ(focused.p_value, manual.p_value);

  Matrix identical(10, 4);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 4; ++j) identical(i, j) = 0.1 * static_cast<double>(i);
  }
  const auto same = Results(FocusedArms(), identical);
  EXPECT_EQ(FocusedTest(same).p_value, 1.0);

  Matrix shifted = RandomMatrix(20, 4, rng);
  for (std::size_t i = 0; i < 20; ++i) shifted(i, 0) += 8.0;
  EXPECT_TRUE(FocusedTest(Results(FocusedArms(), shifted)).rejected);

  EXPECT_ERROR_CODE(FocusedTest(Results({"lr:RS", "rf:RS+"}, Matrix(3, 2))),
                    kMissingArm);
}

TEST(Report, FloorAndLayout) {
  testing::TempDir dir;
  Rng rng(1);
  Matrix m = RandomMatrix(100, 3, rng);
  for (std::size_t i = 0; i < 100; ++i) m(i, 2) += 30.0;
  const auto results = Results({"lr:RS", "rf:RS", "xgboost:RS"}, m);
  const PosthocReport rep =
      PairwisePosthoc(results, HypothesisSpec{}, AllPairs(results.arms));
  EXPECT_TRUE(rep.omnibus.floored || rep.omnibus.p_value < 1e-10);
  ExportReport(dir / "report.csv", rep, "prov");
  const std::string text = testing::ReadAll(dir / "report.csv");
  EXPECT_EQ(text.rfind("# prov\ncomparison,statistic,p_raw,p_adjusted,rejected\nomnibus,", 0),
            0u)
      << text;
  EXPECT_NE(text.find("lr:RS vs rf:RS,"), std::string::npos);
  TestResult tiny;
  tiny.p_value = kMinPValue;
  tiny.floored = true;
  EXPECT_EQ(FormatPValue(tiny), "<2.2e-16");
}

TEST(Spec, Validation) {
  HypothesisSpec s;
  s.alpha = 1.0;
  EXPECT_ERROR_CODE(s.Validate(), kConfig);
  s.alpha = 0.05;
  s.arms = {"lr:RS", "lr:RS"};
  EXPECT_ERROR_CODE(s.Validate(), kConfig);
}

}  // namespace
}  // namespace locust_sdm::stats
