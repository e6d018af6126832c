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

#include "locust_sdm/eval.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstring>
#include <exception>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/random.h"

namespace locust_sdm::eval {

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view AlgorithmPart(std::string_view arm) {
  return arm.substr(0, arm.find(':'));
}

}  // namespace

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kLr: return "lr";
    case Algorithm::kXgboost: return "xgboost";
    case Algorithm::kRf: return "rf";
    case Algorithm::kMaxent: return "maxent";
  }
  return "?";
}

std::optional<Algorithm> ParseAlgorithm(std::string_view text) {
  const std::string t = Lower(text);
  for (Algorithm a : {Algorithm::kLr, Algorithm::kXgboost, Algorithm::kRf,
                      Algorithm::kMaxent}) {
    if (t == AlgorithmName(a)) return a;
  }
  return std::nullopt;
}

std::string Arm::Name() const {
  return std::string(AlgorithmName(algorithm)) + ":" +
         std::string(dataset::MethodName(method));
}

std::optional<Arm> ParseArm(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto algorithm = ParseAlgorithm(text.substr(0, colon));
  const auto method = dataset::ParseMethod(Upper(text.substr(colon + 1)));
  if (!algorithm || !method) return std::nullopt;
  const bool background = *method == Method::kBs;
  if ((*algorithm == Algorithm::kMaxent) != background) return std::nullopt;
  if (*method == Method::kMixed) return std::nullopt;
  return Arm{*algorithm, *method};
}

const std::vector<Arm>& AllArms() {
  static const std::vector<Arm> kArms = [] {
    std::vector<Arm> arms;
    for (Algorithm a : {Algorithm::kLr, Algorithm::kXgboost, Algorithm::kRf}) {
      for (Method m : {Method::kRs, Method::kRsep, Method::kRsPlus,
                       Method::kRsepPlus}) {
        arms.push_back({a, m});
      }
    }
    arms.push_back({Algorithm::kMaxent, Method::kBs});
    return arms;
  }();
  return kArms;
}

std::uint64_t HashTestSet(const Matrix& x, std::span<const int> labels) {
  std::uint64_t h = Mix64(x.rows() * 0x9e3779b97f4a7c15ULL + x.cols());
  for (double v : x.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = Mix64(h ^ bits);
  }
  for (int y : labels) h = Mix64(h ^ static_cast<std::uint64_t>(y + 2));
  return h;
}

// ---------------------------------------------------------------------------
// ResultsMatrix

std::size_t ResultsMatrix::ArmIndex(std::string_view arm) const {
  for (std::size_t j = 0; j < arms.size(); ++j) {
    if (arms[j] == arm) return j;
  }
  throw Error(ErrorCode::kMissingArm,
              "arm " + std::string(arm) + " not in the " + metric + " matrix");
}

std::vector<double> ResultsMatrix::Column(std::string_view arm) const {
  return values.Column(ArmIndex(arm));
}

ResultsMatrix ResultsMatrix::SelectArms(
    std::span<const std::string> names) const {
  std::vector<std::size_t> cols;
  for (const std::string& n : names) cols.push_back(ArmIndex(n));
  ResultsMatrix out;
  out.metric = metric;
  out.arms.assign(names.begin(), names.end());
  out.values = values.SelectColumns(cols);
  return out;
}

// ---------------------------------------------------------------------------
// Harness

namespace {

struct SplitState {
  std::unique_ptr<pa_gen::SplitContext> ctx;
  Matrix presence_x;
  std::unique_ptr<pa_gen::Profile> profile;
};

SplitState MakeSplit(const dataset::RasterStack& stack,
                     std::span<const dataset::Observation> presences,
                     const pa_gen::PaConfig& pa, const char* name) {
  if (presences.empty()) {
    throw Error(ErrorCode::kConfig, std::string("no ") + name + " presences");
  }
  SplitState s;
  s.ctx = std::make_unique<pa_gen::SplitContext>(stack.grid, presences);
  s.presence_x = pa_gen::ObservationFeatures(stack, presences);
  s.profile = std::make_unique<pa_gen::Profile>(pa_gen::ProfileUnsuitable(
      stack.grid, s.presence_x,
      pa_gen::GridFeatures(stack, s.ctx->median_date()),
      dataset::FeatureSchema::Default(), pa.ocsvm));
  return s;
}

pa_gen::PseudoAbsenceSet Sample(const SplitState& split, Method method,
                                const std::map<Method, pa_gen::ExtentResult>&
                                    extents,
                                const pa_gen::PaConfig& cfg) {
  switch (method) {
    case Method::kRs: return pa_gen::SampleRs(*split.ctx, cfg);
    case Method::kRsep: return pa_gen::SampleRsep(*split.ctx, *split.profile, cfg);
    case Method::kRsPlus:
      return pa_gen::SampleRsPlus(*split.ctx, extents.at(method), cfg);
    case Method::kRsepPlus:
      return pa_gen::SampleRsepPlus(*split.ctx, *split.profile,
                                    extents.at(method), cfg);
    default: break;
  }
  throw Error(ErrorCode::kConfig, "not a pseudo-absence method");
}

struct Prepared {
  SplitState train;
  SplitState test_split;
  std::map<Method, pa_gen::ExtentResult> train_extents;
  TestSet test;
  std::map<Method, double> radii;
};

Prepared Prepare(const ExperimentInputs& in, const ExperimentConfig& cfg) {
  const dataset::RasterStack& stack = *in.stack;
  Prepared p;
  p.train = MakeSplit(stack, in.train_presences, cfg.pa, "training");
  p.test_split = MakeSplit(stack, in.test_presences, cfg.pa, "test");

  // Each split tunes its own extents from its own presences.
  auto tune = [&](const SplitState& split) {
    std::map<Method, pa_gen::ExtentResult> out;
    pa_gen::PaConfig extent_cfg = cfg.pa;
    extent_cfg.seed = cfg.base_seed;
    const auto quick = pa_gen::MakeLrQuickModel(stack, split.presence_x);
    const auto outside = split.ctx->OutsideBuffer(cfg.pa.exclusion_buffer_km);
    for (Method m : {Method::kRsPlus, Method::kRsepPlus}) {
      const geo::CellMask base =
          m == Method::kRsPlus ? outside : outside & split.profile->unsuitable;
      out.emplace(m, pa_gen::OptimizeExtent(*split.ctx, base, extent_cfg, quick));
    }
    return out;
  };
  p.train_extents = tune(p.train);
  const std::map<Method, pa_gen::ExtentResult> test_extents = tune(p.test_split);
  for (const auto& [m, r] : p.train_extents) p.radii[m] = r.radius_km;

  pa_gen::PaConfig test_cfg = cfg.pa;
  test_cfg.seed = DeriveSeed(cfg.base_seed, HashString("test-mixture"));
  std::map<Method, pa_gen::PseudoAbsenceSet> sets;
  for (Method m : dataset::PseudoAbsenceMethods()) {
    sets.emplace(m, Sample(p.test_split, m, test_extents, test_cfg));
  }
  const std::size_t n_test = in.test_presences.size();
  const pa_gen::PseudoAbsenceSet mixture =
      pa_gen::BuildTestMixture(sets, n_test, test_cfg.seed);

  TestSet& t = p.test;
  t.x = p.test_split.presence_x;
  t.x.Append(pa_gen::PointFeatures(stack, mixture.points));
  t.presences = n_test;
  for (const auto& o : in.test_presences) {
    t.cells.push_back(*stack.grid.Locate(o.location));
    t.dates.push_back(o.date);
    t.labels.push_back(1);
  }
  for (const auto& pt : mixture.points) {
    t.cells.push_back(pt.cell);
    t.dates.push_back(pt.date);
    t.labels.push_back(0);
  }
  if (in.oracle) {
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
      t.labels[i] = in.oracle(t.cells[i], t.dates[i]) ? 1 : 0;
    }
  }
  t.hash = HashTestSet(t.x, t.labels);
  return p;
}

std::vector<double> FitAndScore(const Arm& arm, const Matrix& presence_x,
                                const Matrix& negatives_x, const TestSet& test,
                                const ModelSettings& settings,
                                std::uint64_t seed) {
  if (arm.algorithm == Algorithm::kMaxent) {
    return models::PredictProba(
        models::MaxentFit(presence_x, negatives_x, settings.maxent), test.x);
  }
  Matrix x = presence_x;
  x.Append(negatives_x);
  std::vector<int> y(x.rows(), 0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(presence_x.rows()), 1);
  const std::uint64_t fit_seed = DeriveSeed(seed, HashString(arm.Name()));
  switch (arm.algorithm) {
    case Algorithm::kLr:
      return models::PredictProba(models::LrFit(x, y, settings.lr), test.x);
    case Algorithm::kRf: {
      models::ForestOptions o = settings.rf;
      o.seed = fit_seed;
      return models::PredictProba(models::RfFit(x, y, o), test.x);
    }
    case Algorithm::kXgboost: {
      models::GbmOptions o = settings.gbm;
      o.seed = fit_seed;
      return models::PredictProba(models::GbmFit(x, y, o), test.x);
    }
    default: break;
  }
  throw Error(ErrorCode::kConfig, "unknown algorithm");
}

struct RunRow {
  std::vector<double> accuracy;
  std::vector<double> f1;
};

void Record(RunRow& row, const TestSet& test, std::span<const int> predictions) {
  const Confusion c = Tally(test.labels, predictions);
  row.accuracy.push_back(Accuracy(c));
  row.f1.push_back(F1(c));
}

RunRow RunOnce(const ExperimentInputs& in, const ExperimentConfig& cfg,
               const Prepared& p, std::uint64_t seed) {
  const dataset::RasterStack& stack = *in.stack;
  pa_gen::PaConfig pa = cfg.pa;
  pa.seed = seed;

  std::map<Method, Matrix> negatives;
  for (const Arm& arm : cfg.arms) {
    if (negatives.count(arm.method)) continue;
    if (arm.method == Method::kBs) {
      const std::size_t n_p = in.train_presences.size();
      const auto wanted = static_cast<std::size_t>(std::llround(
          cfg.models.background_multiplier * static_cast<double>(n_p)));
      const std::size_t n = std::min(wanted, stack.grid.size());
      const auto bg = pa_gen::SampleBackground(
          stack.grid, n, p.train.ctx->first_date(), p.train.ctx->last_date(),
          DeriveSeed(seed, HashString("BS")));
      negatives.emplace(arm.method, pa_gen::PointFeatures(stack, bg.points));
    } else {
      const auto set = Sample(p.train, arm.method, p.train_extents, pa);
      negatives.emplace(arm.method, pa_gen::PointFeatures(stack, set.points));
    }
  }

  if (HashTestSet(p.test.x, p.test.labels) != p.test.hash) {
    throw Error(ErrorCode::kConfig, "shared test set changed during the experiment");
  }
  RunRow row;
  for (const Arm& arm : cfg.arms) {
    const std::vector<double> proba =
        FitAndScore(arm, p.train.presence_x, negatives.at(arm.method), p.test,
                    cfg.models, seed);
    std::vector<int> pred(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i) {
      pred[i] = proba[i] >= cfg.models.threshold ? 1 : 0;
    }
    Record(row, p.test, pred);
  }
  for (const CustomArm& arm : cfg.custom_arms) {
    const std::vector<int> pred = arm.predict(p.test, seed);
    if (pred.size() != p.test.labels.size()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "arm " + arm.name + " returned the wrong prediction count");
    }
    Record(row, p.test, pred);
  }
  return row;
}

}  // namespace

ExperimentResult RunExperiment(const ExperimentInputs& inputs,
                               const ExperimentConfig& config) {
  if (!inputs.stack) throw Error(ErrorCode::kConfig, "no raster stack");
  if (config.n_runs < 1) throw Error(ErrorCode::kConfig, "n_runs must be >= 1");
  if (config.jobs < 1) throw Error(ErrorCode::kConfig, "jobs must be >= 1");
  if (config.arms.empty() && config.custom_arms.empty()) {
    throw Error(ErrorCode::kConfig, "no arms");
  }
  config.pa.Validate();
  std::vector<std::string> names;
  for (const Arm& a : config.arms) {
    if (!ParseArm(a.Name())) {
      throw Error(ErrorCode::kConfig, "invalid arm " + a.Name());
    }
    names.push_back(a.Name());
  }
  for (const CustomArm& a : config.custom_arms) {
    if (!a.predict) throw Error(ErrorCode::kConfig, "arm " + a.name + " has no predictor");
    names.push_back(a.name);
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw Error(ErrorCode::kConfig, "duplicate arm names");
  }

  const Prepared prepared = Prepare(inputs, config);
  const auto n_runs = static_cast<std::size_t>(config.n_runs);
  std::vector<RunRow> rows(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t r = next++; r < n_runs && !failed; r = next++) {
      try {
        rows[r] = RunOnce(inputs, config, prepared, config.base_seed + r);
      } catch (...) {
        errors[r] = std::current_exception();
        failed = true;
      }
    }
  };
  const int jobs = std::min<int>(config.jobs, config.n_runs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t r = 0; r < n_runs; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const Error& e) {
      throw Error(e.code(), "run " + std::to_string(r) + ": " + e.what());
    }
  }

  ExperimentResult out;
  out.accuracy.metric = "accuracy";
  out.f1.metric = "f1";
  out.accuracy.arms = out.f1.arms = names;
  out.accuracy.values = Matrix(n_runs, names.size());
  out.f1.values = Matrix(n_runs, names.size());
  for (std::size_t r = 0; r < n_runs; ++r) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      out.accuracy.values(r, j) = rows[r].accuracy[j];
      out.f1.values(r, j) = rows[r].f1[j];
    }
  }
  out.test_hash = prepared.test.hash;
  out.test_rows = prepared.test.labels.size();
  out.extent_radius_km = prepared.radii;
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

Summary Summarize(const ResultsMatrix& matrix) {
  const std::size_t n = matrix.runs();
  if (n < 2) {
    throw Error(ErrorCode::kEmptyEvaluation, "summary needs at least 2 runs");
  }
  Summary s;
  s.metric = matrix.metric;
  s.runs = n;
  for (std::size_t j = 0; j < matrix.arms.size(); ++j) {
    const std::vector<double> col = matrix.values.Column(j);
    // Shifted by the first value so a constant column is exact.
    double shift = 0.0;
    for (double v : col) shift += v - col[0];
    const double mean = col[0] + shift / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    s.arms.push_back({matrix.arms[j], mean, sd / std::sqrt(static_cast<double>(n)),
                      false});
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < s.arms.size(); ++j) {
    groups[std::string(AlgorithmPart(s.arms[j].arm))].push_back(j);
  }
  for (const auto& [name, members] : groups) {
    if (members.size() < 2) continue;
    std::size_t best = members.front();
    for (std::size_t j : members) {
      if (s.arms[j].mean > s.arms[best].mean) best = j;
    }
    s.arms[best].best = true;
  }
  return s;
}

std::string FormatTable(std::span<const Summary> summaries) {
  const std::vector<std::string> algorithms{"lr", "xgboost", "rf", "maxent"};
  const std::vector<std::string> methods{"RS", "RSEP", "RS+", "RSEP+"};
  auto cell = [](const ArmSummary& a) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << a.mean << "±"
       << a.standard_error << (a.best ? "*" : "");
    return os.str();
  };
  std::ostringstream out;
  for (const Summary& s : summaries) {
    out << s.metric << " (mean±se over " << s.runs << " runs, * best method per algorithm)\n";
    out << std::left << std::setw(8) << "method";
    for (const auto& a : algorithms) out << std::setw(18) << a;
    out << '\n';
    std::set<std::string> shown;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      out << std::setw(8) << methods[i];
      for (const auto& a : algorithms) {
        std::string text = "-";
        for (const ArmSummary& arm : s.arms) {
          const bool match =
              a == "maxent" ? (i == 0 && AlgorithmPart(arm.arm) == "maxent")
                            : arm.arm == a + ":" + methods[i];
          if (match) {
            text = cell(arm);
            shown.insert(arm.arm);
          }
        }
        // Column widths count bytes; the '±' sign takes two.
        out << std::setw(18 + (text == "-" ? 0 : 1)) << text;
      }
      out << '\n';
    }
    for (const ArmSummary& arm : s.arms) {
      if (!shown.count(arm.arm)) out << arm.arm << "  " << cell(arm) << '\n';
    }
    out << '\n';
  }
  std::string text = out.str();
  // Trailing spaces are dropped so the table diffs cleanly.
  std::string cleaned;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    cleaned += line + '\n';
  }
  return cleaned;
}

void ExportResults(const std::filesystem::path& path,
                   std::span<const ResultsMatrix> matrices,
                   const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "run,arm,metric,value\n";
    for (const ResultsMatrix& m : matrices) {
      for (std::size_t r = 0; r < m.runs(); ++r) {
        for (std::size_t j = 0; j < m.arms.size(); ++j) {
          out << r << ',' << m.arms[j] << ',' << m.metric << ','
              << FormatDouble(m.values(r, j)) << '\n';
        }
      }
    }
  });
}

std::vector<ResultsMatrix> ReadResults(const std::filesystem::path& path) {
  struct Partial {
    std::vector<std::string> arms;
    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::size_t runs = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Partial> parts;
  ReadCsv(path, {"run", "arm", "metric", "value"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            const std::string where = "line " + std::to_string(line);
            if (f.size() != 4) throw Error(ErrorCode::kParse, where + ": expected 4 fields");
            const auto run = ParseInt(f[0]);
            const auto value = ParseDouble(f[3]);
            if (!run || *run < 0 || !value) {
              throw Error(ErrorCode::kParse, where + ": bad run or value");
            }
            const std::string metric(f[2]);
            if (!parts.count(metric)) order.push_back(metric);
            Partial& p = parts[metric];
            const std::string arm(f[1]);
            auto it = std::find(p.arms.begin(), p.arms.end(), arm);
            const auto j = static_cast<std::size_t>(it - p.arms.begin());
            if (it == p.arms.end()) p.arms.push_back(arm);
            const auto r = static_cast<std::size_t>(*run);
            if (!p.cells.emplace(std::make_pair(r, j), *value).second) {
              throw Error(ErrorCode::kParse, where + ": duplicate cell");
            }
            p.runs = std::max(p.runs, r + 1);
          });
  std::vector<ResultsMatrix> out;
  for (const std::string& metric : order) {
    const Partial& p = parts[metric];
    if (p.cells.size() != p.runs * p.arms.size()) {
      throw Error(ErrorCode::kParse, "results for " + metric + " are not rectangular");
    }
    ResultsMatrix m;
    m.metric = metric;
    m.arms = p.arms;
    m.values = Matrix(p.runs, p.arms.size());
    for (const auto& [key, v] : p.cells) m.values(key.first, key.second) = v;
    out.push_back(std::move(m));
  }
  return out;
}

void ExportSummary(const std::filesystem::path& path,
                   std::span<const Summary> summaries,
                   const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "metric,arm,mean,se,best\n";
    for (const Summary& s : summaries) {
      for (const ArmSummary& a : s.arms) {
        out << s.metric << ',' << a.arm << ',' << FormatDouble(a.mean) << ','
            << FormatDouble(a.standard_error) << ',' << (a.best ? 1 : 0) << '\n';
      }
    }
  });
}

}  // namespace locust_sdm::eval
