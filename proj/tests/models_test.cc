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

#include <cmath>
#include <numeric>
#include <sstream>

#include "locust_sdm/models.h"
#include "locust_sdm/random.h"
#include "test_util.h"

namespace locust_sdm::models {
namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data Separable1D(int n) {
  Data d{Matrix(n, 1), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    const double v = -1.0 + 2.0 * (i + 0.5) / n;
    d.x(i, 0) = v;
    d.y[i] = v > 0 ? 1 : 0;
  }
  return d;
}

Data Xor(int n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Matrix(n, 2), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * UniformUnit(rng) - 1.0;
    const double b = 2.0 * UniformUnit(rng) - 1.0;
    d.x(i, 0) = a;
    d.x(i, 1) = b;
    d.y[i] = (a > 0) != (b > 0) ? 1 : 0;
  }
  return d;
}

Data NoisyLinear(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Matrix(n, p), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    double m = 0.3;
    for (int j = 0; j < p; ++j) {
      d.x(i, j) = StandardNormal(rng) * (1.0 + j) + j;
      m += (j % 2 ? -0.8 : 0.6) * (d.x(i, j) - j) / (1.0 + j);
    }
    d.y[i] = UniformUnit(rng) < 1.0 / (1.0 + std::exp(-m)) ? 1 : 0;
  }
  return d;
}

double Accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  int hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / a.size();
}

// ---------------------------------------------------------------------------

TEST(Lr, SeparableSignRecovery) {
  const Data d = Separable1D(40);
  const LinearModel m = LrFit(d.x, d.y);
  EXPECT_GT(m.weights[0], 0.0);
  EXPECT_EQ(Accuracy(Classify(m, d.x), d.y), 1.0);
}

TEST(Lr, SingleClass) {
  Matrix x(5, 1, 1.0);
  const std::vector<int> y(5, 1);
  EXPECT_ERROR_CODE(LrFit(x, y), kSingleClass);
}

TEST(Lr, NonFinite) {
  Data d = Separable1D(10);
  d.x(3, 0) = std::numeric_limits<double>::infinity();
  EXPECT_ERROR_CODE(LrFit(d.x, d.y), kNonFinite);
}

TEST(Lr, GradientMatchesFiniteDifferences) {
  const Data d = NoisyLinear(60, 4, 21);
  const LogisticObjective obj(d.x, d.y, 0.3);
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> w(4);
    for (double& v : w) v = StandardNormal(rng);
    const double b = StandardNormal(rng);
    std::vector<double> gw(4);
    double gb = 0.0;
    obj.Gradient(w, b, gw, gb);
    const double h = 1e-5;
    for (int j = 0; j < 4; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (obj.Value(wp, b) - obj.Value(wm, b)) / (2 * h);
      EXPECT_NEAR(gw[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    const double fd = (obj.Value(w, b + h) - obj.Value(w, b - h)) / (2 * h);
    EXPECT_NEAR(gb, fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Lr, ConvergesAndIsAffineInvariant) {
  const Data d = NoisyLinear(300, 5, 4);
  FitDiagnostics diag;
  const LinearModel a = LrFit(d.x, d.y, {}, &diag);
  EXPECT_TRUE(diag.converged);
  EXPECT_LT(diag.final_residual, 1e-8);
  Matrix scaled = d.x;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j < scaled.cols(); ++j) {
      scaled(i, j) = scaled(i, j) * (3.0 + j) - 17.0 * j;
    }
  }
  const LinearModel b = LrFit(scaled, d.y);
  const auto pa = PredictProba(a, d.x);
  const auto pb = PredictProba(b, scaled);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-6);
  EXPECT_EQ(Classify(a, d.x), Classify(b, scaled));
}

TEST(Lr, ConstantColumnGetsZeroWeight) {
  Data d = NoisyLinear(100, 3, 2);
  for (std::size_t i = 0; i < d.x.rows(); ++i) d.x(i, 1) = 5.0;
  const LinearModel m = LrFit(d.x, d.y);
  EXPECT_EQ(m.weights[1], 0.0);
  EXPECT_EQ(m.feature_stds[1], 1.0);
}

TEST(Lr, ZeroModelIsHalf) {
  LinearModel m;
  m.weights = {0.0, 0.0};
  m.feature_means = {0.0, 0.0};
  m.feature_stds = {1.0, 1.0};
  const std::vector<double> x{123.0, -4.0};
  EXPECT_EQ(m.Probability(x), 0.5);
  Matrix one(1, 2);
  EXPECT_EQ(Classify(m, one)[0], 1);
}

// ---------------------------------------------------------------------------

TEST(Rf, SingleStumpSplitsPerfectly) {
  // Two well separated groups, so any threshold between the sampled classes
  // separates the full training set.
  Data d{Matrix(30, 1), std::vector<int>(30)};
  for (int i = 0; i < 30; ++i) {
    d.y[i] = i % 2;
    d.x(i, 0) = (i % 2 ? 1.0 : -1.0) + 0.01 * i;
  }
  ForestOptions o;
  o.n_trees = 1;
  o.max_depth = 1;
  o.seed = 1;
  const Forest f = RfFit(d.x, d.y, o);
  EXPECT_EQ(Accuracy(Classify(f, d.x), d.y), 1.0);
  EXPECT_LE(f.trees[0].Depth(), 1);
}

TEST(Rf, DefaultMtry) {
  EXPECT_EQ(DefaultMtry(174), 13);
  EXPECT_EQ(DefaultMtry(2), 1);
  EXPECT_EQ(DefaultMtry(1), 1);
}

TEST(Rf, LearnsXor) {
  const Data d = Xor(200, 3);
  ForestOptions o;
  o.n_trees = 100;
  o.seed = 5;
  const Forest f = RfFit(d.x, d.y, o);
  EXPECT_GE(Accuracy(Classify(f, d.x), d.y), 0.95);
  for (const Tree& t : f.trees) EXPECT_LE(t.Depth(), 15);
}

TEST(Rf, DeterministicGivenSeed) {
  const Data d = NoisyLinear(120, 6, 9);
  ForestOptions o;
  o.n_trees = 20;
  o.seed = 77;
  EXPECT_EQ(PredictProba(RfFit(d.x, d.y, o), d.x),
            PredictProba(RfFit(d.x, d.y, o), d.x));
  const auto p = PredictProba(RfFit(d.x, d.y, o), d.x);
  for (double v : p) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Rf, ConstantTreesGiveLeafValue) {
  Forest f;
  f.num_features = 3;
  f.trees.assign(4, Tree::Leaf(0.7));
  EXPECT_DOUBLE_EQ(PredictProba(f, Matrix(2, 3))[1], 0.7);
}

TEST(Rf, Errors) {
  Matrix x(4, 1, 0.0);
  EXPECT_ERROR_CODE(RfFit(x, std::vector<int>{0, 0, 0, 0}), kSingleClass);
  ForestOptions o;
  o.n_trees = 0;
  EXPECT_ERROR_CODE(RfFit(x, std::vector<int>{0, 1, 0, 1}, o), kConfig);
}

// ---------------------------------------------------------------------------

TEST(Gbm, ZeroRoundsIsBaseScore) {
  const Data d = NoisyLinear(50, 2, 1);
  GbmOptions o;
  o.n_rounds = 0;
  const BoostedEnsemble m = GbmFit(d.x, d.y, o);
  const double mean =
      std::accumulate(d.y.begin(), d.y.end(), 0.0) / d.y.size();
  EXPECT_NEAR(m.base_score, std::log(mean / (1 - mean)), 1e-12);
  for (double p : PredictProba(m, d.x)) EXPECT_NEAR(p, mean, 1e-12);
}

TEST(Gbm, SeparableFits) {
  const Data d = Separable1D(40);
  GbmOptions o;
  o.n_rounds = 50;
  const BoostedEnsemble m = GbmFit(d.x, d.y, o);
  EXPECT_EQ(Accuracy(Classify(m, d.x), d.y), 1.0);
}

TEST(Gbm, LossMonotoneAndDepthBounded) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Data d = NoisyLinear(200, 5, seed);
    FitDiagnostics diag;
    const BoostedEnsemble m = GbmFit(d.x, d.y, {}, &diag);
    ASSERT_EQ(diag.objective_trace.size(), 101u);
    for (std::size_t i = 1; i < diag.objective_trace.size(); ++i) {
      EXPECT_LE(diag.objective_trace[i], diag.objective_trace[i - 1] + 1e-9);
    }
    for (const Tree& t : m.trees) EXPECT_LE(t.Depth(), 4);
  }
}

TEST(Gbm, LearnsXorAndIsDeterministic) {
  const Data d = Xor(200, 8);
  const BoostedEnsemble a = GbmFit(d.x, d.y);
  EXPECT_GE(Accuracy(Classify(a, d.x), d.y), 0.95);
  EXPECT_EQ(PredictProba(a, d.x), PredictProba(GbmFit(d.x, d.y), d.x));
}

// ---------------------------------------------------------------------------

TEST(Ocsvm, IdenticalPointsAllInside) {
  Matrix x(10, 3, 2.5);
  for (double nu : {0.5, 0.37, 1.0}) {
    OcsvmOptions o;
    o.nu = nu;
    const OcsvmModel m = OcsvmFit(x, o);
    for (std::size_t i = 0; i < x.rows(); ++i) EXPECT_GE(m.Decision(x.row(i)), 0.0);
  }
}

Matrix Cluster(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 3.0 + StandardNormal(rng);
    x(i, 1) = -1.0 + StandardNormal(rng);
  }
  return x;
}

TEST(Ocsvm, NuBoundsOutlierFraction) {
  const Matrix x = Cluster(200, 12);
  OcsvmOptions o;
  o.nu = 0.1;
  FitDiagnostics diag;
  const OcsvmModel m = OcsvmFit(x, o, &diag);
  EXPECT_TRUE(diag.converged);
  int outside = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) outside += m.Decision(x.row(i)) < 0;
  EXPECT_GE(outside / 200.0, 0.0);
  EXPECT_LE(outside / 200.0, 0.15);
  const double sum = std::accumulate(m.alphas.begin(), m.alphas.end(), 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-8);
  // Free support vectors lie on the boundary.
  const double upper = 1.0 / (o.nu * 200);
  for (std::size_t i = 0; i < m.alphas.size(); ++i) {
    if (m.alphas[i] > 1e-12 && m.alphas[i] < upper - 1e-12) {
      EXPECT_NEAR(m.Decision(m.support_vectors.row(i)), 0.0, 1e-3);
    }
  }
}

TEST(Ocsvm, FarPointIsOutside) {
  const Matrix x = Cluster(200, 2);
  const OcsvmModel m = OcsvmFit(x);
  const std::vector<double> far{3.0 + 10.0, -1.0};
  EXPECT_LT(m.Decision(far), 0.0);
  EXPECT_LT(Probability(AnyModel(m), far), 0.5);
}

TEST(Ocsvm, Errors) {
  const Matrix x = Cluster(10, 1);
  OcsvmOptions o;
  o.nu = 0.0;
  EXPECT_ERROR_CODE(OcsvmFit(x, o), kConfig);
  o.nu = 1.5;
  EXPECT_ERROR_CODE(OcsvmFit(x, o), kConfig);
  o.nu = 0.5;
  o.gamma = -1.0;
  EXPECT_ERROR_CODE(OcsvmFit(x, o), kConfig);
  EXPECT_ERROR_CODE(OcsvmFit(Matrix(1, 2)), kConfig);
}

// ---------------------------------------------------------------------------

TEST(Maxent, HugeRegularizationZeroesBetas) {
  const Data d = NoisyLinear(80, 3, 6);
  Matrix pres;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    if (d.y[i]) pres.AppendRow(d.x.row(i));
  }
  MaxentOptions o;
  o.reg_factor = 1e6;
  const MaxentModel m = MaxentFit(pres, d.x, o);
  for (double b : m.betas) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(m.Eta(d.x.row(0)), m.Eta(d.x.row(1)));
}

TEST(Maxent, PresencesAtHighFeatureGivePositiveBeta) {
  Rng rng(31);
  Matrix bg(500, 1);
  for (std::size_t i = 0; i < bg.rows(); ++i) bg(i, 0) = UniformUnit(rng);
  Matrix pres(60, 1);
  for (std::size_t i = 0; i < pres.rows(); ++i) {
    pres(i, 0) = 0.7 + 0.3 * UniformUnit(rng);
  }
  FitDiagnostics diag;
  const MaxentModel m = MaxentFit(pres, bg, {}, &diag);
  EXPECT_GT(m.betas[0], 0.0);
  EXPECT_TRUE(m.converged);
  for (std::size_t i = 1; i < diag.objective_trace.size(); ++i) {
    EXPECT_GE(diag.objective_trace[i], diag.objective_trace[i - 1] - 1e-9);
  }
  const std::vector<double> hi{0.95}, lo{0.05};
  EXPECT_GT(m.Probability(hi), m.Probability(lo));
}

TEST(Maxent, TwoCellClosedForm) {
  // Background {0, 1}; three of four presences at 1. With standardized
  // values z = +-1 the optimum is tanh(beta) = mean_p(z) = 0.5, so the
  // fitted mass on the second cell is 3/4.
  Matrix bg(2, 1);
  bg(1, 0) = 1.0;
  Matrix pres(4, 1, 1.0);
  pres(0, 0) = 0.0;
  MaxentOptions o;
  o.reg_factor = 0.0;
  const MaxentModel m = MaxentFit(pres, bg, o);
  EXPECT_NEAR(m.betas[0], std::atanh(0.5), 1e-6);
  const std::vector<double> one{1.0};
  EXPECT_NEAR(std::exp(m.Eta(one) - m.log_partition), 0.75, 1e-6);
}

TEST(Maxent, ObjectiveMonotoneOnWiderProblem) {
  const Data d = NoisyLinear(400, 6, 17);
  Matrix pres;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    if (d.y[i]) pres.AppendRow(d.x.row(i));
  }
  FitDiagnostics diag;
  const MaxentModel m = MaxentFit(pres, d.x, {}, &diag);
  EXPECT_TRUE(diag.converged);
  for (std::size_t i = 1; i < diag.objective_trace.size(); ++i) {
    EXPECT_GE(diag.objective_trace[i], diag.objective_trace[i - 1] - 1e-9);
  }
  for (double p : PredictProba(m, d.x)) {
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Maxent, Errors) {
  EXPECT_ERROR_CODE(MaxentFit(Matrix(0, 1), Matrix(5, 1)), kConfig);
  EXPECT_ERROR_CODE(MaxentFit(Matrix(2, 1), Matrix(1, 1)), kConfig);
  Matrix bad(3, 1);
  bad(0, 0) = std::nan("");
  EXPECT_ERROR_CODE(MaxentFit(Matrix(2, 1), bad), kNonFinite);
}

// ---------------------------------------------------------------------------

TEST(Contract, SchemaMismatch) {
  const Data d = Separable1D(20);
  const AnyModel m = LrFit(d.x, d.y);
  EXPECT_ERROR_CODE(PredictProba(m, Matrix(2, 3)), kSchemaMismatch);
}

TEST(Contract, NoNanForFiniteInputs) {
  const Data d = NoisyLinear(150, 4, 44);
  Matrix extreme(3, 4);
  for (std::size_t j = 0; j < 4; ++j) {
    extreme(0, j) = 1e150;
    extreme(1, j) = -1e150;
    extreme(2, j) = 0.0;
  }
  ForestOptions fo;
  fo.n_trees = 10;
  Matrix pres;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    if (d.y[i]) pres.AppendRow(d.x.row(i));
  }
  const std::vector<AnyModel> models{LrFit(d.x, d.y), RfFit(d.x, d.y, fo),
                                     GbmFit(d.x, d.y), OcsvmFit(d.x),
                                     MaxentFit(pres, d.x)};
  for (const AnyModel& m : models) {
    for (double p : PredictProba(m, extreme)) {
      EXPECT_FALSE(std::isnan(p)) << ModelKind(m);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(Serialization, RoundTripIsBitStable) {
  const Data d = NoisyLinear(120, 4, 13);
  Matrix pres;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    if (d.y[i]) pres.AppendRow(d.x.row(i));
  }
  ForestOptions fo;
  fo.n_trees = 15;
  fo.seed = 3;
  const std::vector<std::string> schema{"f0", "f1", "f2", "f3"};
  const std::vector<AnyModel> models{LrFit(d.x, d.y), RfFit(d.x, d.y, fo),
                                     GbmFit(d.x, d.y), OcsvmFit(d.x),
                                     MaxentFit(pres, d.x)};
  for (const AnyModel& m : models) {
    std::stringstream ss;
    SaveModel(ss, TrainedModel{schema, m});
    const TrainedModel back = LoadModel(ss);
    EXPECT_EQ(back.schema, schema);
    EXPECT_EQ(ModelKind(back.model), ModelKind(m));
    EXPECT_EQ(PredictProba(back, d.x), PredictProba(m, d.x)) << ModelKind(m);
  }
}

TEST(Serialization, RejectsGarbage) {
  std::stringstream a("not a model\n");
  EXPECT_ERROR_CODE(LoadModel(a), kParse);
  std::stringstream b("locust-sdm-model 1\nkind svm\nschema 0\n");
  EXPECT_ERROR_CODE(LoadModel(b), kParse);
  std::stringstream c("locust-sdm-model 1\nkind lr\nschema 1\nx\nweights 1\n");
  EXPECT_ERROR_CODE(LoadModel(c), kParse);
}

TEST(Serialization, FileRoundTrip) {
  testing::TempDir dir;
  const Data d = Separable1D(20);
  const TrainedModel m{{"x"}, LrFit(d.x, d.y)};
  SaveModelFile(dir / "m.txt", m, "prov line");
  EXPECT_EQ(PredictProba(LoadModelFile(dir / "m.txt"), d.x),
            PredictProba(m, d.x));
  EXPECT_ERROR_CODE(LoadModelFile(dir / "none.txt"), kIo);
}

}  // namespace
}  // namespace locust_sdm::models
