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

// Repeated-run experiment harness over {algorithm x generation method} arms
// and the tabulation of its results.

#ifndef LOCUST_SDM_EVAL_H_
#define LOCUST_SDM_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "locust_sdm/dataset.h"
#include "locust_sdm/matrix.h"
#include "locust_sdm/metrics.h"
#include "locust_sdm/models.h"
#include "locust_sdm/pa_gen.h"

namespace locust_sdm::eval {

using dataset::Method;

enum class Algorithm { kLr, kXgboost, kRf, kMaxent };

std::string_view AlgorithmName(Algorithm algorithm);
std::optional<Algorithm> ParseAlgorithm(std::string_view text);

struct Arm {
  Algorithm algorithm = Algorithm::kLr;
  Method method = Method::kRs;

  // "lr:RS", "maxent:BS", ...
  std::string Name() const;
  friend bool operator==(const Arm&, const Arm&) = default;
};

// Accepts "algorithm:method" case-insensitively. MaxEnt pairs only with BS
// and the other algorithms only with the four pseudo-absence methods.
std::optional<Arm> ParseArm(std::string_view text);

// lr, xgboost and rf crossed with RS, RSEP, RS+, RSEP+, then maxent:BS.
const std::vector<Arm>& AllArms();

struct ModelSettings {
  models::LrOptions lr;
  models::ForestOptions rf;
  models::GbmOptions gbm;
  models::MaxentOptions maxent;
  double background_multiplier = 10.0;
  double threshold = 0.5;
};

// Fixed evaluation rows shared by every arm and run.
struct TestSet {
  Matrix x;
  std::vector<int> labels;
  std::vector<geo::CellId> cells;
  std::vector<Date> dates;
  std::size_t presences = 0;  // the first rows
  std::uint64_t hash = 0;
};

std::uint64_t HashTestSet(const Matrix& x, std::span<const int> labels);

// An arm evaluated by a caller-supplied predictor instead of a fitted model,
// for reference classifiers.
struct CustomArm {
  std::string name;
  std::function<std::vector<int>(const TestSet& test, std::uint64_t seed)>
      predict;
};

// True species state at a cell and date.
using Labeller = std::function<bool(geo::CellId cell, Date date)>;

struct ExperimentInputs {
  std::shared_ptr<const dataset::RasterStack> stack;
  std::vector<dataset::Observation> train_presences;
  std::vector<dataset::Observation> test_presences;
  // Relabels every test row when set; nominal labels otherwise.
  Labeller oracle;
};

struct ExperimentConfig {
  std::vector<Arm> arms = AllArms();
  std::vector<CustomArm> custom_arms;
  int n_runs = 100;
  std::uint64_t base_seed = 0;
  pa_gen::PaConfig pa;
  ModelSettings models;
  int jobs = 1;
};

// Runs x arms table of one metric. Rows are indexed by run, so the value
// for run r came from seed base_seed + r.
struct ResultsMatrix {
  std::string metric;
  std::vector<std::string> arms;
  Matrix values;

  std::size_t runs() const { return values.rows(); }
  // Throws Error(kMissingArm).
  std::size_t ArmIndex(std::string_view arm) const;
  std::vector<double> Column(std::string_view arm) const;
  ResultsMatrix SelectArms(std::span<const std::string> names) const;
};

struct ExperimentResult {
  ResultsMatrix accuracy;
  ResultsMatrix f1;
  std::uint64_t test_hash = 0;
  std::size_t test_rows = 0;
  std::map<Method, double> extent_radius_km;
};

// Per run r the training pseudo-absences of every method are regenerated
// with seed base_seed + r, each arm is fitted and scored on the shared test
// set of test presences plus a balanced mixture of the four methods. Extents
// and profiles are fixed per experiment. A failing run aborts with its index.
ExperimentResult RunExperiment(const ExperimentInputs& inputs,
                               const ExperimentConfig& config);

struct ArmSummary {
  std::string arm;
  double mean = 0.0;
  double standard_error = 0.0;
  bool best = false;  // highest mean among arms of the same algorithm
};

struct Summary {
  std::string metric;
  std::size_t runs = 0;
  std::vector<ArmSummary> arms;  // matrix column order
};

// Standard error is the sample standard deviation over sqrt(runs). Throws
// Error(kEmptyEvaluation) with fewer than 2 runs.
Summary Summarize(const ResultsMatrix& matrix);

// Methods as rows and algorithms as columns; best cells carry a '*'.
std::string FormatTable(std::span<const Summary> summaries);

// run,arm,metric,value
void ExportResults(const std::filesystem::path& path,
                   std::span<const ResultsMatrix> matrices,
                   const std::string& provenance = {});
// One matrix per metric, in first-appearance order. Throws Error(kParse) on
// a non-rectangular file.
std::vector<ResultsMatrix> ReadResults(const std::filesystem::path& path);

// metric,arm,mean,se,best
void ExportSummary(const std::filesystem::path& path,
                   std::span<const Summary> summaries,
                   const std::string& provenance = {});

}  // namespace locust_sdm::eval

#endif  // LOCUST_SDM_EVAL_H_
