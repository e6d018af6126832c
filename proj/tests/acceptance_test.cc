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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: acceptance_test [criterion ...]; no arguments runs all nine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli_util.h"
#include "locust_sdm/dataset.h"
#include "locust_sdm/errors.h"
#include "locust_sdm/eval.h"
#include "locust_sdm/explain.h"
#include "locust_sdm/models.h"
#include "locust_sdm/pa_gen.h"
#include "locust_sdm/random.h"
#include "locust_sdm/stats.h"
#include "locust_sdm/synth.h"

namespace locust_sdm::acceptance {
namespace {

namespace fs = std::filesystem;
using dataset::Method;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Num(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Date D(const char* text) { return *ParseDate(text); }

Matrix RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = StandardNormal(rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// 1 and 2 share the same 200 generated sets.

struct PaRuns {
  double seconds = 0.0;
  std::size_t sets = 0;
  std::size_t points = 0;
  std::size_t buffer_violations = 0;
  double min_distance_km = 1e300;
  std::size_t profiled = 0;
  std::size_t profile_violations = 0;
  std::size_t extent_checked = 0;
  std::size_t extent_violations = 0;
  std::size_t cell_mismatches = 0;
};

const PaRuns& FortyByFortyRuns() {
  static const PaRuns runs = [] {
    PaRuns out;
    const Clock clock;
    dataset::SynthWorldConfig wc;
    wc.bbox = {10.0, 20.0, 0.0, 10.0};
    wc.start_date = D("2014-01-01");
    wc.end_date = D("2014-12-31");
    wc.presence_count = 100;
    const dataset::SynthWorld world = dataset::SynthGenerate(wc);
    const geo::Grid& grid = world.stack->grid;
    std::vector<geo::GeoPoint> presences;
    for (const auto& p : world.presences) presences.push_back(p.location);

    for (Method method : {Method::kRs, Method::kRsep, Method::kRsPlus, Method::kRsepPlus}) {
      for (std::uint64_t run = 0; run < 50; ++run) {
        pa_gen::PaConfig cfg;
        cfg.seed = run;
        const pa_gen::Generated g =
            pa_gen::GenerateForMethod(*world.stack, world.presences, method, cfg);
        ++out.sets;
        for (const pa_gen::PaPoint& pt : g.set.points) {
          ++out.points;
          for (const geo::GeoPoint& pr : presences) {
            const double d = geo::HaversineKm(pt.location, pr);
            out.min_distance_km = std::min(out.min_distance_km, d);
            if (d < cfg.exclusion_buffer_km) ++out.buffer_violations;
          }
          if (grid.Locate(pt.location) != pt.cell) ++out.cell_mismatches;
          if (g.profile) {
            ++out.profiled;
            if (!(g.profile->decision[pt.cell] < 0.0)) ++out.profile_violations;
          }
          if (g.extent) {
            ++out.extent_checked;
            if (!g.extent->mask[pt.cell]) ++out.extent_violations;
          }
        }
      }
    }
    out.seconds = clock.Seconds();
    return out;
  }();
  return runs;
}

Outcome BufferInvariant() {
  const PaRuns& r = FortyByFortyRuns();
  const bool pass = r.sets == 200 && r.points > 0 && r.buffer_violations == 0 &&
                    r.seconds < 60.0;
  return {pass, std::to_string(r.sets) + " sets, " + std::to_string(r.points) +
                    " points, " + std::to_string(r.buffer_violations) +
                    " within 30 km, min distance " + Num(r.min_distance_km) + " km, " +
                    Num(r.seconds, 3) + " s (limit 60 s)"};
}

Outcome ProfilingInvariant() {
  const PaRuns& r = FortyByFortyRuns();
  const bool pass = r.profiled > 0 && r.extent_checked > 0 &&
                    r.profile_violations == 0 && r.extent_violations == 0 &&
                    r.cell_mismatches == 0;
  return {pass, std::to_string(r.profile_violations) + "/" + std::to_string(r.profiled) +
                    " profiled points with decision >= 0, " +
                    std::to_string(r.extent_violations) + "/" +
                    std::to_string(r.extent_checked) + " points outside the extent, " +
                    std::to_string(r.cell_mismatches) + " cell mismatches"};
}

// ---------------------------------------------------------------------------

dataset::RasterStack FilledStack(const geo::Grid& grid, Date first, std::size_t days,
                                 const std::function<double(std::size_t, std::size_t,
                                                            geo::CellId)>& fill) {
  dataset::RasterStack s;
  s.grid = grid;
  const auto& tv = dataset::DefaultTemporalVariables();
  for (std::size_t v = 0; v < tv.size(); ++v) {
    dataset::TemporalRaster r(tv[v], grid, first, days);
    for (std::size_t d = 0; d < days; ++d) {
      for (geo::CellId c = 0; c < grid.size(); ++c) r.at(d, c) = fill(v, d, c);
    }
    s.temporal.push_back(std::move(r));
  }
  const auto& sv = dataset::DefaultStaticVariables();
  for (std::size_t v = 0; v < sv.size(); ++v) {
    dataset::StaticRaster r(sv[v], grid);
    for (geo::CellId c = 0; c < grid.size(); ++c) r.at(c) = 100.0 * (v + 1) + c;
    s.statics.push_back(std::move(r));
  }
  return s;
}

Outcome FeaturePipeline() {
  const std::size_t count = dataset::FeatureSchema::Default().size();

  const geo::Grid grid = geo::Grid::Build({0.0, 1.0, 0.0, 1.0}, 0.5);
  const Date date = D("2015-06-30");
  const dataset::RasterStack ramp =
      FilledStack(grid, date - std::chrono::days(94), 95,
                  [](std::size_t, std::size_t d, geo::CellId) { return d + 1.0; });
  const auto fv = dataset::AssembleFeatures(ramp, grid.Center(1), date).values;
  int bucket_errors = 0;
  for (std::size_t v = 0; v < 12; ++v) {
    for (int i = 1; i <= 14; ++i) {
      bucket_errors += fv[v * 14 + (i - 1)] != 6.0 * (i - 1) + 3.5;
    }
  }

  // Random series; each raster in turn gets its 7 newest days overwritten.
  Rng rng(17);
  std::vector<double> noise(12 * 140 * grid.size());
  for (double& x : noise) x = StandardNormal(rng);
  auto base = [&](std::size_t v, std::size_t d, geo::CellId c) {
    return noise[(v * 140 + d) * grid.size() + c];
  };
  const Date first = D("2015-01-01");
  const Date last = first + std::chrono::days(139);
  const dataset::RasterStack reference = FilledStack(grid, first, 140, base);
  int changed = 0, compared = 0;
  for (std::size_t target = 0; target < 12; ++target) {
    for (Date obs : {last, last - std::chrono::days(20)}) {
      const std::size_t obs_day = static_cast<std::size_t>((obs - first).count());
      const dataset::RasterStack perturbed = FilledStack(
          grid, first, 140, [&](std::size_t v, std::size_t d, geo::CellId c) {
            const bool lead = v == target && d <= obs_day && d + 7 > obs_day;
            return lead ? 1e9 + 17.0 * d : base(v, d, c);
          });
      for (geo::CellId c = 0; c < grid.size(); ++c) {
        ++compared;
        changed += dataset::AssembleFeatures(reference, grid.Center(c), obs).values !=
                   dataset::AssembleFeatures(perturbed, grid.Center(c), obs).values;
      }
    }
  }
  const bool pass = count == 174 && fv.size() == 174 && bucket_errors == 0 && changed == 0;
  return {pass, std::to_string(count) + " features, " + std::to_string(bucket_errors) +
                    "/168 bucket means off, " + std::to_string(changed) + "/" +
                    std::to_string(compared) + " feature vectors changed by lead-day edits"};
}

// ---------------------------------------------------------------------------

struct Labeled {
  Matrix x;
  std::vector<int> y;
};

Labeled NoisyLinear(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Labeled out{Matrix(n, d), std::vector<int>(n)};
  std::vector<double> w(d);
  for (double& v : w) v = StandardNormal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.x(i, j) = StandardNormal(rng) * (1.0 + j);
      m += w[j] * out.x(i, j) / (1.0 + j);
    }
    out.y[i] = m + StandardNormal(rng) > 0.0;
  }
  return out;
}

Outcome OptimizerCorrectness() {
  // LR gradient against central differences.
  double worst_gradient = 0.0;
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + trial % 6;
    const Labeled data = NoisyLinear(40 + 5 * trial, d, 100 + trial);
    const double l2 = 0.01 * (trial % 5);
    const models::LogisticObjective obj(data.x, data.y, l2);
    std::vector<double> w(d), g(d);
    for (double& v : w) v = StandardNormal(rng);
    const double b = StandardNormal(rng);
    double gb = 0.0;
    obj.Gradient(w, b, g, gb);
    const double h = 1e-5;
    auto rel = [](double analytic, double numeric) {
      return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
    };
    for (std::size_t j = 0; j < d; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      worst_gradient = std::max(
          worst_gradient, rel(g[j], (obj.Value(wp, b) - obj.Value(wm, b)) / (2 * h)));
    }
    worst_gradient =
        std::max(worst_gradient, rel(gb, (obj.Value(w, b + h) - obj.Value(w, b - h)) / (2 * h)));
  }

  // GBM log-loss per round and MaxEnt objective per accepted step.
  int gbm_increases = 0, maxent_decreases = 0;
  std::size_t gbm_steps = 0, maxent_steps = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Labeled data = NoisyLinear(300, 6, seed);
    models::FitDiagnostics gd;
    models::GbmOptions go;
    go.seed = seed;
    models::GbmFit(data.x, data.y, go, &gd);
    for (std::size_t i = 1; i < gd.objective_trace.size(); ++i, ++gbm_steps) {
      gbm_increases += gd.objective_trace[i] > gd.objective_trace[i - 1];
    }

    Matrix presence, background;
    for (std::size_t i = 0; i < data.x.rows(); ++i) {
      background.AppendRow(data.x.row(i));
      if (data.y[i]) presence.AppendRow(data.x.row(i));
    }
    models::FitDiagnostics md;
    models::MaxentFit(presence, background, {}, &md);
    for (std::size_t i = 1; i < md.objective_trace.size(); ++i, ++maxent_steps) {
      maxent_decreases += md.objective_trace[i] < md.objective_trace[i - 1];
    }
  }

  // OCSVM: free support vectors sit on the boundary.
  double worst_kkt = 0.0;
  std::size_t margin_svs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng r(seed);
    const Matrix x = RandomMatrix(150, 3, r);
    models::OcsvmOptions o;
    o.nu = 0.1 + 0.1 * static_cast<double>(seed);
    const models::OcsvmModel m = models::OcsvmFit(x, o);
    const double upper = 1.0 / (o.nu * static_cast<double>(x.rows()));
    for (std::size_t i = 0; i < m.alphas.size(); ++i) {
      if (m.alphas[i] > 1e-9 && m.alphas[i] < upper - 1e-9) {
        ++margin_svs;
        worst_kkt = std::max(worst_kkt, std::abs(m.Decision(m.support_vectors.row(i))));
      }
    }
  }

  const bool pass = worst_gradient <= 1e-6 && gbm_steps > 0 && gbm_increases == 0 &&
                    maxent_steps > 0 && maxent_decreases == 0 && margin_svs > 0 &&
                    worst_kkt < 1e-3;
  return {pass, "LR gradient rel err " + Num(worst_gradient, 3) + " (20 instances), GBM " +
                    std::to_string(gbm_increases) + "/" + std::to_string(gbm_steps) +
                    " rounds increased loss, MaxEnt " + std::to_string(maxent_decreases) +
                    "/" + std::to_string(maxent_steps) +
                    " steps decreased objective, OCSVM KKT residual " + Num(worst_kkt, 3) +
                    " over " + std::to_string(margin_svs) + " margin SVs"};
}

// ---------------------------------------------------------------------------

struct TemporalWorld {
  dataset::SynthWorld world;
  std::vector<dataset::Observation> train;
  std::vector<dataset::Observation> test;

  eval::ExperimentInputs Inputs() const {
    eval::ExperimentInputs in;
    in.stack = world.stack;
    in.train_presences = train;
    in.test_presences = test;
    const dataset::SynthOracle oracle = world.oracle;
    in.oracle = [oracle](geo::CellId cell, Date date) { return oracle.Label(cell, date); };
    return in;
  }
};

TemporalWorld MakeTemporalWorld(const dataset::SynthWorldConfig& config) {
  TemporalWorld w{dataset::SynthGenerate(config), {}, {}};
  std::span<const dataset::Observation> all(w.world.presences);
  std::tie(w.train, w.test) = dataset::TemporalSplit(all, 2014);
  return w;
}

Outcome OraclePipeline() {
  const Clock clock;
  dataset::SynthWorldConfig wc;
  wc.bbox = {10.0, 25.0, 0.0, 15.0};
  wc.presence_count = 400;
  const TemporalWorld w = MakeTemporalWorld(wc);
  eval::ExperimentConfig cfg;
  cfg.n_runs = 20;
  cfg.jobs = 4;
  const eval::ExperimentResult r = eval::RunExperiment(w.Inputs(), cfg);
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double acc = mean(r.accuracy.Column("lr:RS"));
  const double f1 = mean(r.f1.Column("lr:RS"));
  std::size_t finite = 0;
  for (double v : r.accuracy.values.data()) finite += std::isfinite(v);
  const double seconds = clock.Seconds();
  const bool complete = r.accuracy.arms.size() == 13 && r.accuracy.runs() == 20 &&
                        finite == 13u * 20u;
  const bool pass = acc >= 0.80 && f1 >= 0.80 && complete && seconds < 600.0;
  return {pass, "lr:RS mean accuracy " + Num(acc) + ", F1 " + Num(f1) + " over 20 runs; " +
                    std::to_string(r.accuracy.arms.size()) + " arms, " +
                    std::to_string(finite) + " finite scores, " + Num(seconds, 3) +
                    " s (limit 600 s)"};
}

// ---------------------------------------------------------------------------

Outcome StatisticalMachinery() {
  Rng rng(606);
  double worst_perm = 0.0;
  int within = 0;
  const int matrices = 10;
  for (int t = 0; t < matrices; ++t) {
    const Matrix m = RandomMatrix(4, 6, rng);
    const double diff = std::abs(stats::FriedmanAlignedRanks(m).p_value -
                                 stats::PermutationPValue(m, 100000, 1000 + t));
    worst_perm = std::max(worst_perm, diff);
    within += diff <= 0.02;
  }
  const bool perm_ok = within == matrices;

  int rejections = 0;
  for (int s = 0; s < 2000; ++s) {
    rejections += stats::FriedmanAlignedRanks(RandomMatrix(20, 5, rng)).rejected;
  }
  const double rate = rejections / 2000.0;
  const bool calib_ok = std::abs(rate - 0.05) <= 0.02;

  const std::vector<double> holm = stats::HolmAdjust(std::vector<double>{0.01, 0.04, 0.03});
  const bool holm_ok = holm == std::vector<double>{0.03, 0.06, 0.06};

  const double sf = stats::ChiSquareSf(3.841459, 1);
  const bool sf_ok = std::abs(sf - 0.05) <= 1e-6;

  return {perm_ok && calib_ok && holm_ok && sf_ok,
          std::string("permutation agreement ") + (perm_ok ? "ok" : "FAIL") + " (" +
              std::to_string(within) + "/" + std::to_string(matrices) +
              " random 4x6 matrices within 0.02, max |diff| " + Num(worst_perm, 3) +
              "); null rejection rate " + Num(rate, 3) + (calib_ok ? " ok" : " FAIL") +
              "; Holm " + (holm_ok ? "exact" : "FAIL") + "; chi2 sf " + Num(sf, 10) +
              (sf_ok ? " ok" : " FAIL")};
}

// ---------------------------------------------------------------------------

Outcome ShapleyCorrectness() {
  Rng rng(77);
  double worst_exact = 0.0, worst_local = 0.0, worst_sampling = 0.0;
  for (std::size_t d = 1; d <= 10; ++d) {
    models::LinearModel m;
    m.bias = StandardNormal(rng);
    for (std::size_t j = 0; j < d; ++j) {
      m.weights.push_back(StandardNormal(rng));
      m.feature_means.push_back(StandardNormal(rng));
      m.feature_stds.push_back(0.5 + UniformUnit(rng));
    }
    const Matrix background = RandomMatrix(12, d, rng);
    const explain::OutputFn f = [&](std::span<const double> x) { return m.LogOdds(x); };
    for (int k = 0; k < 3; ++k) {
      std::vector<double> x(d);
      for (double& v : x) v = 2.0 * StandardNormal(rng);
      const explain::Attribution lin = explain::LinearShap(m, background, x);
      const explain::Attribution brute = explain::BruteForceShap(f, background, x);
      double sum = lin.base_value;
      for (std::size_t j = 0; j < d; ++j) {
        worst_exact = std::max(worst_exact, std::abs(lin.phi[j] - brute.phi[j]));
        sum += lin.phi[j];
      }
      worst_local = std::max(worst_local, std::abs(sum - m.LogOdds(x)));
      if (d == 6 || d == 10) {
        const explain::Attribution s =
            explain::SamplingShap(f, background, x, 10000, DeriveSeed(d, k));
        for (std::size_t j = 0; j < d; ++j) {
          worst_sampling = std::max(worst_sampling, std::abs(s.phi[j] - lin.phi[j]));
        }
      }
    }
  }
  const bool pass = worst_exact <= 1e-9 && worst_local <= 1e-9 && worst_sampling <= 0.01;
  return {pass, "linear vs coalition enumeration max |diff| " + Num(worst_exact, 3) +
                    " (d = 1..10), local accuracy error " + Num(worst_local, 3) +
                    ", sampling (1e4 permutations) max |diff| " + Num(worst_sampling, 3)};
}

// ---------------------------------------------------------------------------

// LR on RS pseudo-absences with a seed stream of its own, used as a stand-in
// for any named arm.
eval::CustomArm LrRsUnder(std::string name, const TemporalWorld& w) {
  auto ctx = std::make_shared<pa_gen::SplitContext>(w.world.stack->grid, w.train);
  auto presence_x = std::make_shared<Matrix>(pa_gen::ObservationFeatures(*w.world.stack, w.train));
  auto stack = w.world.stack;
  const std::uint64_t stream = HashString(name);
  return {std::move(name), [=](const eval::TestSet& test, std::uint64_t seed) {
            pa_gen::PaConfig cfg;
            cfg.seed = DeriveSeed(seed, stream);
            const pa_gen::PseudoAbsenceSet pa = pa_gen::SampleRs(*ctx, cfg);
            Matrix x = *presence_x;
            x.Append(pa_gen::PointFeatures(*stack, pa.points));
            std::vector<int> y(x.rows(), 0);
            std::fill(y.begin(), y.begin() + presence_x->rows(), 1);
            return models::Classify(models::AnyModel(models::LrFit(x, y)), test.x);
          }};
}

Outcome QualitativeEcho() {
  const TemporalWorld w = MakeTemporalWorld(dataset::SynthWorldConfig{});
  const auto& focused = stats::FocusedArms();

  // Three real arms plus a truth-telling arm under the last focused name.
  eval::ExperimentConfig dominant;
  dominant.n_runs = 10;
  dominant.jobs = 4;
  dominant.arms.clear();
  for (std::size_t i = 0; i + 1 < focused.size(); ++i) {
    dominant.arms.push_back(*eval::ParseArm(focused[i]));
  }
  dominant.custom_arms.push_back(
      {focused.back(), [](const eval::TestSet& t, std::uint64_t) { return t.labels; }});
  const eval::ExperimentResult rd = eval::RunExperiment(w.Inputs(), dominant);
  const stats::TestResult td = stats::FocusedTest(rd.accuracy);

  // Every focused name runs the same LR-on-RS model.
  eval::ExperimentConfig null_cfg;
  null_cfg.n_runs = 10;
  null_cfg.jobs = 4;
  null_cfg.arms.clear();
  for (const std::string& name : focused) null_cfg.custom_arms.push_back(LrRsUnder(name, w));
  const eval::ExperimentResult rn = eval::RunExperiment(w.Inputs(), null_cfg);
  const stats::TestResult tn = stats::FocusedTest(rn.accuracy);

  const bool pass = td.rejected && !tn.rejected;
  return {pass, "dominant arm: p = " + Num(td.p_value, 3) +
                    (td.rejected ? " rejected" : " not rejected") +
                    "; relabeled identical model: p = " + Num(tn.p_value, 3) +
                    (tn.rejected ? " rejected" : " not rejected") + " (alpha 0.05, 10 runs)"};
}

// ---------------------------------------------------------------------------

Outcome Determinism() {
  using testing::RunTool;
  using testing::TreeBytes;
  const fs::path root = fs::temp_directory_path() / "locust_sdm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string in = (root / "inputs").string();
  const std::string w = in + "/world";

  std::vector<std::string> failures;
  auto must = [&](const std::vector<std::string>& args) {
    const testing::CliResult r = RunTool(args);
    if (r.code != 0) failures.push_back(args[0] + " setup: " + r.err);
  };
  std::size_t commands = 0;
  // Runs `args` twice with `--out` under run1/ and run2/; compares the exit
  // code, stdout and every output byte.
  auto twice = [&](const std::string& label, std::vector<std::string> args,
                   const std::string& out_name) {
    ++commands;
    std::map<std::string, std::string> trees[2];
    testing::CliResult results[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = root / ("run" + std::to_string(k + 1)) / label / out_name;
      fs::create_directories(out.parent_path());
      std::vector<std::string> a = args;
      if (!out_name.empty()) {
        a.push_back("--out");
        a.push_back(out.string());
      }
      results[k] = RunTool(a);
      if (!out_name.empty() && fs::exists(out)) trees[k] = TreeBytes(out);
    }
    if (results[0].code != 0) {
      failures.push_back(label + " failed: " + results[0].err);
    } else if (results[0].code != results[1].code || results[0].out != results[1].out ||
               trees[0] != trees[1] || (!out_name.empty() && trees[0].empty())) {
      failures.push_back(label + " differs");
    }
  };

  twice("synth", {"synth", "--start-date", "2014-06-01", "--end-date", "2015-06-30", "--seed",
                  "5"},
        "world");
  must({"synth", "--start-date", "2014-06-01", "--end-date", "2015-06-30", "--seed", "5",
        "--out", w});
  const std::string rs = in + "/rs.csv", rsep_plus = in + "/rsep_plus.csv";
  must({"pagen", "--world", w, "--method", "rs", "--out", rs});
  must({"pagen", "--world", w, "--method", "rsep+", "--out", rsep_plus});
  must({"train", "--world", w, "--pseudo-absences", rs, "--out", in + "/lr.model"});
  must({"train", "--world", w, "--pseudo-absences", rs, "--algorithm", "rf", "--rf-trees",
        "30", "--out", in + "/rf.model"});
  must({"experiment", "--world", w, "--runs", "4", "--jobs", "2", "--arms",
        "lr:RS,rf:RS+,xgboost:RS+,maxent:BS", "--metric", "all", "--out", in + "/exp"});
  must({"explain", "--world", w, "--model", in + "/lr.model", "--pseudo-absences", rs,
        "--out", in + "/x"});
  if (!failures.empty()) {
    fs::remove_all(root);
    return {false, failures.front()};
  }

  twice("ingest", {"ingest", "--world", w}, "ing");
  twice("features", {"features", "--world", w, "--pseudo-absences", rs}, "f.csv");
  for (const char* m : {"rs", "rsep", "rs+", "rsep+", "bs"}) {
    twice(std::string("pagen_") + m, {"pagen", "--world", w, "--method", m}, "pa.csv");
  }
  twice("train_lr", {"train", "--world", w, "--pseudo-absences", rs}, "m.model");
  twice("train_xgboost", {"train", "--world", w, "--pseudo-absences", rsep_plus,
                          "--algorithm", "xgboost"},
        "m.model");
  twice("experiment", {"experiment", "--world", w, "--runs", "3", "--jobs", "3", "--arms",
                       "lr:RS,rf:RSEP+,maxent:BS", "--metric", "all"},
        "e");
  twice("stats", {"stats", "--results", in + "/exp/results.csv"}, "report.csv");
  twice("stats_posthoc", {"stats", "--results", in + "/exp/results.csv", "--hypothesis",
                          "posthoc", "--force", "true"},
        "report.csv");
  twice("explain_lr", {"explain", "--world", w, "--model", in + "/lr.model",
                       "--pseudo-absences", rs},
        "x");
  twice("explain_rf", {"explain", "--world", w, "--model", in + "/rf.model",
                       "--pseudo-absences", rs, "--explain-limit", "6",
                       "--shap-permutations", "40", "--shap-background", "20", "--jobs", "3"},
        "x");
  twice("plot_pa_map", {"plot", "--world", w, "--inputs", rs + "," + rsep_plus}, "p");
  twice("plot_shap", {"plot", "--plot", "shap", "--explanation", in + "/x"}, "p");
  twice("verify", {"verify", "--world", w, "--pseudo-absences", rs}, "");
  twice("replay", {"replay", rsep_plus}, "again.csv");

  fs::remove_all(root);
  if (!failures.empty()) {
    std::string msg;
    for (const auto& f : failures) msg += (msg.empty() ? "" : "; ") + f;
    return {false, msg};
  }
  return {true, std::to_string(commands) +
                    " invocations covering every subcommand were byte-identical across "
                    "two runs"};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> kAll{
      {1, "buffer invariant", BufferInvariant},
      {2, "profiling invariant", ProfilingInvariant},
      {3, "feature pipeline exactness", FeaturePipeline},
      {4, "optimizer correctness", OptimizerCorrectness},
      {5, "oracle pipeline performance", OraclePipeline},
      {6, "statistical machinery", StatisticalMachinery},
      {7, "Shapley correctness", ShapleyCorrectness},
      {8, "qualitative protocol echo", QualitativeEcho},
      {9, "determinism", Determinism},
  };
  return kAll;
}

int Main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : Criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace locust_sdm::acceptance

int main(int argc, char** argv) { return locust_sdm::acceptance::Main(argc, argv); }
