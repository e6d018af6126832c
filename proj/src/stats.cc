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

#include "locust_sdm/stats.h"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <set>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/random.h"

namespace locust_sdm::stats {

namespace {

// Midranks (1-based). Values within `tol` of their sorted neighbour share a
// rank, so rounding noise from the alignment step does not break ties. The
// tolerance scales with the raw data, not with the residuals.
std::vector<double> Midranks(std::span<const double> v, double tol) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] - v[order[j]] <= tol) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double TieTolerance(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  return 1e-12 * std::max(scale, 1e-300);
}

void CheckBlocks(const Matrix& m) {
  if (m.rows() < 2 || m.cols() < 2) {
    throw Error(ErrorCode::kConfig,
                "the omnibus test needs at least 2 blocks and 2 treatments");
  }
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite metric value");
  }
}

std::vector<double> Aligned(const Matrix& m) {
  std::vector<double> out(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mean = 0.0;
    for (double v : m.row(i)) mean += v;
    mean /= static_cast<double>(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out[i * m.cols() + j] = m(i, j) - mean;
    }
  }
  return out;
}

// Returns nullopt when the aligned values carry no ordering information.
std::optional<double> Statistic(std::span<const double> aligned, std::size_t n,
                                std::size_t k, double tol) {
  const auto [lo, hi] = std::minmax_element(aligned.begin(), aligned.end());
  if (*hi - *lo <= tol) return std::nullopt;
  const std::vector<double> r = Midranks(aligned, tol);
  std::vector<double> col(k, 0.0), row(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      col[j] += r[i * k + j];
      row[i] += r[i * k + j];
    }
  }
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double kn = kd * nd;
  double col_sq = 0.0, row_sq = 0.0;
  for (double c : col) col_sq += c * c;
  for (double b : row) row_sq += b * b;
  const double num = (kd - 1.0) * (col_sq - (kd * nd * nd / 4.0) * (kn + 1.0) * (kn + 1.0));
  const double den = kn * (kn + 1.0) * (2.0 * kn + 1.0) / 6.0 - row_sq / kd;
  if (!(den > 0.0)) return std::nullopt;
  return std::max(0.0, num / den);
}

void Floor(TestResult& r) {
  if (r.p_value < kMinPValue) {
    r.p_value = kMinPValue;
    r.floored = true;
  }
}

double NormalUpper2(double z) { return std::erfc(z / std::sqrt(2.0)); }

}  // namespace

void HypothesisSpec::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kConfig, "alpha must lie in (0, 1)");
  }
  if (std::set<std::string>(arms.begin(), arms.end()).size() != arms.size()) {
    throw Error(ErrorCode::kConfig, "hypothesis arms must be distinct");
  }
}

double ChiSquareSf(double x, int df) {
  if (df < 1 || !std::isfinite(x) || x < 0.0) {
    throw Error(ErrorCode::kDomain, "chi-square tail needs x >= 0 and df >= 1");
  }
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double AlignedRanksStatistic(const Matrix& blocks) {
  CheckBlocks(blocks);
  return Statistic(Aligned(blocks), blocks.rows(), blocks.cols(),
                   TieTolerance(blocks.data()))
      .value_or(0.0);
}

TestResult FriedmanAlignedRanks(const Matrix& blocks, double alpha) {
  CheckBlocks(blocks);
  TestResult r;
  r.comparison = "omnibus";
  r.method = "friedman_aligned_ranks";
  const int df = static_cast<int>(blocks.cols()) - 1;
  r.df = df;
  const auto t = Statistic(Aligned(blocks), blocks.rows(), blocks.cols(),
                           TieTolerance(blocks.data()));
  if (!t) {
    r.degenerate = true;
    r.statistic = 0.0;
    r.p_raw = r.p_value = 1.0;
  } else {
    r.statistic = *t;
    r.p_raw = r.p_value = ChiSquareSf(*t, df);
  }
  Floor(r);
  r.rejected = r.p_value < alpha;
  return r;
}

double PermutationPValue(const Matrix& blocks, int resamples, std::uint64_t seed) {
  CheckBlocks(blocks);
  if (resamples < 1) throw Error(ErrorCode::kConfig, "resamples must be >= 1");
  const std::size_t n = blocks.rows(), k = blocks.cols();
  const std::vector<double> base = Aligned(blocks);
  const double tol = TieTolerance(blocks.data());
  const double observed = Statistic(base, n, k, tol).value_or(0.0);
  // Alignment commutes with within-block permutation, so permute the
  // aligned values directly.
  std::vector<double> work = base;
  Rng rng(seed);
  int hits = 0;
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      Shuffle(work.begin() + static_cast<std::ptrdiff_t>(i * k),
              work.begin() + static_cast<std::ptrdiff_t>((i + 1) * k), rng);
    }
    const double t = Statistic(work, n, k, tol).value_or(0.0);
    if (t >= observed - 1e-9 * std::max(1.0, observed)) ++hits;
  }
  return (hits + 1.0) / (resamples + 1.0);
}

std::vector<double> HolmAdjust(std::span<const double> p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kDomain, "p-values must lie in [0, 1]");
    }
  }
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled = static_cast<double>(m - i) * p[order[i]];
    running = std::max(running, std::min(1.0, scaled));
    out[order[i]] = running;
  }
  return out;
}

TestResult WilcoxonSignedRank(std::span<const double> x,
                              std::span<const double> y, double alpha) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "paired samples differ in length");
  }
  TestResult r;
  r.method = "wilcoxon_signed_rank";
  std::vector<double> d;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::kNonFinite, "non-finite metric value");
    }
    scale = std::max({scale, std::abs(x[i]), std::abs(y[i])});
  }
  const double zero_tol = 1e-12 * std::max(scale, 1e-300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    if (std::abs(diff) > zero_tol) d.push_back(diff);
  }
  const std::size_t n = d.size();
  if (n == 0) {
    r.degenerate = true;
    r.statistic = 0.0;
    r.p_raw = r.p_value = 1.0;
    return r;
  }
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d[i]);
  const std::vector<double> ranks = Midranks(mag, zero_tol);
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w += ranks[i];
  }
  r.statistic = w;
  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;

  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    i = j + 1;
  }

  double p;
  if (n < 50 && !ties) {
    // Counts of rank subsets by sum: the exact null of W+.
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t rank = 1; rank <= n; ++rank) {
      for (std::size_t s = max_sum; s >= rank; --s) counts[s] += counts[s - rank];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));
    const auto wi = static_cast<std::size_t>(std::llround(w));
    double tail = 0.0;
    if (w > mean) {
      for (std::size_t s = wi; s <= max_sum; ++s) tail += counts[s];
    } else {
      for (std::size_t s = 0; s <= wi; ++s) tail += counts[s];
    }
    p = std::min(1.0, 2.0 * tail / total);
  } else {
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
    p = std::min(1.0, NormalUpper2(z));
  }
  r.p_raw = r.p_value = p;
  Floor(r);
  r.rejected = r.p_value < alpha;
  return r;
}

std::vector<std::pair<std::string, std::string>> AllPairs(
    const std::vector<std::string>& arms) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    for (std::size_t j = i + 1; j < arms.size(); ++j) out.emplace_back(arms[i], arms[j]);
  }
  return out;
}

PosthocReport PairwisePosthoc(
    const eval::ResultsMatrix& matrix, const HypothesisSpec& spec,
    const std::vector<std::pair<std::string, std::string>>& comparisons,
    bool force) {
  spec.Validate();
  const std::vector<std::string> arms = spec.arms.empty() ? matrix.arms : spec.arms;
  PosthocReport report;
  report.omnibus =
      FriedmanAlignedRanks(matrix.SelectArms(arms).values, spec.alpha);
  if (!report.omnibus.rejected && !force) {
    throw Error(ErrorCode::kOmnibusNotRejected,
                "omnibus p = " + FormatPValue(report.omnibus) +
                    " is not below alpha; post-hoc tests are not warranted");
  }
  std::vector<double> raw;
  for (const auto& [a, b] : comparisons) {
    TestResult t = WilcoxonSignedRank(matrix.Column(a), matrix.Column(b), spec.alpha);
    t.comparison = a + " vs " + b;
    raw.push_back(t.p_raw);
    report.pairs.push_back(std::move(t));
  }
  const std::vector<double> adjusted = HolmAdjust(raw);
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    TestResult& t = report.pairs[i];
    t.p_value = adjusted[i];
    t.floored = false;
    Floor(t);
    t.rejected = t.p_value < spec.alpha;
  }
  return report;
}

const std::vector<std::string>& FocusedArms() {
  static const std::vector<std::string> kArms{"lr:RS", "rf:RS+", "xgboost:RS+",
                                              "maxent:BS"};
  return kArms;
}

TestResult FocusedTest(const eval::ResultsMatrix& matrix,
                       const std::vector<std::string>& arms, double alpha) {
  TestResult r = FriedmanAlignedRanks(matrix.SelectArms(arms).values, alpha);
  r.comparison = "focused";
  return r;
}

std::string FormatPValue(const TestResult& result) {
  return result.floored ? "<2.2e-16" : FormatDouble(result.p_value);
}

void ExportReport(const std::filesystem::path& path, const PosthocReport& report,
                  const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "comparison,statistic,p_raw,p_adjusted,rejected\n";
    auto line = [&](const TestResult& t) {
      TestResult raw = t;
      raw.p_value = t.p_raw;
      raw.floored = false;
      Floor(raw);
      out << t.comparison << ',' << FormatDouble(t.statistic) << ','
          << FormatPValue(raw) << ',' << FormatPValue(t) << ','
          << (t.rejected ? 1 : 0) << '\n';
    };
    line(report.omnibus);
    for (const TestResult& t : report.pairs) line(t);
  });
}

}  // namespace locust_sdm::stats
