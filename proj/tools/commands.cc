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

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "locust_sdm/dataset.h"
#include "locust_sdm/errors.h"
#include "locust_sdm/eval.h"
#include "locust_sdm/explain.h"
#include "locust_sdm/geo.h"
#include "locust_sdm/io.h"
#include "locust_sdm/models.h"
#include "locust_sdm/pa_gen.h"
#include "locust_sdm/random.h"
#include "locust_sdm/stats.h"
#include "locust_sdm/synth.h"
#include "svg.h"

namespace locust_sdm::cli {

namespace fs = std::filesystem;
using dataset::Method;
using dataset::Observation;

namespace {

// Failure that is not a library error, e.g. a failed verification.
struct CommandFailure : std::runtime_error {
  CommandFailure(std::string code, const std::string& message)
      : std::runtime_error(message), code(std::move(code)) {}
  std::string code;
};

[[noreturn]] void Usage(const std::string& message) {
  throw Error(ErrorCode::kUsage, message);
}

// Resolves inputs and outputs of one command and refuses to write over any
// file it read.
class Files {
 public:
  explicit Files(const Context& ctx) : ctx_(ctx) {}

  fs::path In(std::string_view key, std::string_view fallback) {
    return Existing(ctx_.config.InputPath(key, fallback));
  }
  fs::path Existing(const fs::path& p) {
    if (!fs::exists(p)) throw Error(ErrorCode::kIo, "missing input " + p.string());
    inputs_.push_back(fs::weakly_canonical(p));
    return p;
  }

  // `out` as a file.
  fs::path OutFile() const {
    const fs::path p = OutRoot();
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    Guard(p);
    return p;
  }
  // `name` inside the `out` directory.
  fs::path OutDir(std::string_view name) const {
    const fs::path dir = OutRoot();
    fs::create_directories(dir);
    const fs::path p = dir / std::string(name);
    Guard(p);
    return p;
  }

 private:
  fs::path OutRoot() const {
    const std::string& out = ctx_.config.Get("out");
    if (out.empty()) Usage("missing output: set 'out'");
    return out;
  }
  void Guard(const fs::path& p) const {
    const fs::path c = fs::weakly_canonical(p);
    for (const fs::path& in : inputs_) {
      if (in == c) Usage("output " + p.string() + " would overwrite an input");
    }
  }

  const Context& ctx_;
  std::vector<fs::path> inputs_;
};

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileAtomic(path, [&](std::ostream& out) { out << text; });
}

std::string Prov(const Context& ctx) { return ctx.config.Provenance(ctx.subcommand); }

std::shared_ptr<dataset::RasterStack> LoadStack(const Context& ctx, Files& files) {
  auto stack = std::make_shared<dataset::RasterStack>();
  stack->grid = ctx.config.GetGrid();
  stack->temporal = dataset::ReadTemporalRasters(files.In("temporal", "temporal.csv"),
                                                 stack->grid);
  stack->statics = dataset::ReadStaticRasters(files.In("static", "static.csv"),
                                              stack->grid);
  return stack;
}

std::vector<Observation> LoadPresences(const Context& ctx, Files& files) {
  std::vector<Observation> all =
      dataset::IngestObservations(files.In("observations", "observations.csv"));
  std::erase_if(all, [](const Observation& o) { return !o.presence; });
  (void)ctx;
  return all;
}

int TrainEndYear(const Context& ctx) {
  return static_cast<int>(ctx.config.GetInt("train_end_year"));
}

std::vector<Observation> SplitPresences(const Context& ctx,
                                        const std::vector<Observation>& all) {
  const std::string& split = ctx.config.Get("split");
  if (split != "train" && split != "test") Usage("split must be train or test");
  auto [train, test] =
      dataset::TemporalSplit<Observation>(all, TrainEndYear(ctx));
  return split == "train" ? train : test;
}

Method MethodKey(const Context& ctx) {
  const auto m = dataset::ParseMethod(ctx.config.Get("method"));
  if (!m || *m == Method::kMixed) Usage("unknown method '" + ctx.config.Get("method") + "'");
  return *m;
}

pa_gen::PaConfig PaKeys(const Context& ctx) {
  const RunConfig& c = ctx.config;
  pa_gen::PaConfig pa;
  pa.exclusion_buffer_km = c.GetDouble("buffer_km");
  const long long target = c.GetInt("target_count");
  if (target < 0) Usage("target_count must be >= 0");
  if (target > 0) pa.target_count = static_cast<std::size_t>(target);
  pa.seed = c.GetUint("seed");
  pa.ocsvm.nu = c.GetDouble("ocsvm_nu");
  pa.ocsvm.gamma = c.GetDouble("ocsvm_gamma");
  pa.ocsvm.feature_prefixes = c.GetList("ocsvm_features");
  pa.extent_radii_km = c.GetDoubleList("extent_radii");
  pa.extent_threshold = c.GetDouble("extent_threshold");
  try {
    pa.Validate();
  } catch (const Error& e) {
    Usage(e.message());
  }
  return pa;
}

int PositiveInt(const Context& ctx, std::string_view key) {
  const long long v = ctx.config.GetInt(key);
  if (v < 1 || v > std::numeric_limits<int>::max()) {
    Usage("key '" + std::string(key) + "' must be a positive integer");
  }
  return static_cast<int>(v);
}

eval::ModelSettings ModelKeys(const Context& ctx) {
  const RunConfig& c = ctx.config;
  eval::ModelSettings s;
  s.lr.l2 = c.GetDouble("lr_l2");
  s.rf.n_trees = PositiveInt(ctx, "rf_trees");
  s.rf.max_depth = PositiveInt(ctx, "rf_max_depth");
  s.rf.mtry = static_cast<int>(c.GetInt("rf_mtry"));
  s.rf.min_leaf = PositiveInt(ctx, "rf_min_leaf");
  s.gbm.n_rounds = PositiveInt(ctx, "gbm_rounds");
  s.gbm.max_depth = PositiveInt(ctx, "gbm_max_depth");
  s.gbm.learning_rate = c.GetDouble("gbm_learning_rate");
  s.gbm.lambda = c.GetDouble("gbm_lambda");
  s.maxent.reg_factor = c.GetDouble("maxent_reg");
  s.background_multiplier = c.GetDouble("background_multiplier");
  s.threshold = c.GetDouble("threshold");
  if (s.lr.l2 < 0 || s.rf.mtry < 0 || s.gbm.learning_rate <= 0 || s.gbm.lambda < 0 ||
      s.maxent.reg_factor < 0 || s.background_multiplier <= 0 ||
      !(s.threshold > 0 && s.threshold < 1)) {
    Usage("model hyperparameters out of range");
  }
  return s;
}

std::vector<pa_gen::PseudoAbsenceSet> LoadPseudoAbsences(Files& files,
                                                         const std::vector<std::string>& paths,
                                                         const geo::Grid& grid) {
  std::vector<pa_gen::PseudoAbsenceSet> sets;
  for (const std::string& p : paths) {
    sets.push_back(pa_gen::ReadPseudoAbsences(files.Existing(p), grid));
  }
  return sets;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// by index wins.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, const Fn& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Synthetic world parameters, stored so experiments can score against the
// true labels.

void WriteOracle(const fs::path& path, const dataset::SynthOracle& oracle,
                 const dataset::FeatureSchema& schema, const std::string& prov) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    out << "# " << prov << "\nparameter,value\n";
    out << "bias," << FormatDouble(oracle.bias()) << '\n';
    out << "noise," << FormatDouble(oracle.noise()) << '\n';
    out << "seed," << oracle.seed() << '\n';
    for (std::size_t j = 0; j < schema.size(); ++j) {
      out << "weight:" << schema.names()[j] << ',' << FormatDouble(oracle.weights()[j]) << '\n';
      out << "offset:" << schema.names()[j] << ',' << FormatDouble(oracle.offsets()[j]) << '\n';
      out << "scale:" << schema.names()[j] << ',' << FormatDouble(oracle.scales()[j]) << '\n';
    }
  });
}

std::shared_ptr<dataset::SynthOracle> ReadOracle(
    const fs::path& path, std::shared_ptr<const dataset::RasterStack> stack) {
  std::map<std::string, std::string, std::less<>> params;
  ReadCsv(path, {"parameter", "value"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 2 || !params.emplace(std::string(f[0]), std::string(f[1])).second) {
              throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line) +
                                                 ": malformed or repeated parameter");
            }
          });
  auto number = [&](const std::string& key) {
    const auto it = params.find(key);
    const auto v = it == params.end() ? std::nullopt : ParseDouble(it->second);
    if (!v) throw Error(ErrorCode::kParse, path.string() + ": missing or bad '" + key + "'");
    return *v;
  };
  const auto schema = dataset::FeatureSchema::ForStack(*stack);
  std::vector<double> w, o, s;
  for (const std::string& name : schema.names()) {
    w.push_back(number("weight:" + name));
    o.push_back(number("offset:" + name));
    s.push_back(number("scale:" + name));
  }
  const auto seed_it = params.find("seed");
  std::uint64_t seed = 0;
  if (seed_it == params.end() ||
      std::from_chars(seed_it->second.data(), seed_it->second.data() + seed_it->second.size(),
                      seed).ec != std::errc()) {
    throw Error(ErrorCode::kParse, path.string() + ": missing or bad 'seed'");
  }
  return std::make_shared<dataset::SynthOracle>(stack, w, o, s, number("bias"),
                                                number("noise"), seed);
}

// ---------------------------------------------------------------------------

void CmdSynth(Context& ctx) {
  const RunConfig& c = ctx.config;
  Files files(ctx);
  dataset::SynthWorldConfig sc;
  sc.bbox = c.GetBBox();
  sc.resolution = c.GetDouble("resolution");
  sc.start_date = c.GetDate("start_date");
  sc.end_date = c.GetDate("end_date");
  sc.presence_count = PositiveInt(ctx, "presence_count");
  sc.bias = c.GetDouble("synth_bias");
  sc.noise = c.GetDouble("synth_noise");
  sc.seed = c.GetUint("seed");
  c.GetGrid();
  dataset::SynthWorld world;
  try {
    world = dataset::SynthGenerate(sc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) Usage(e.message());
    throw;
  }
  const std::string prov = Prov(ctx);
  dataset::WriteObservations(files.OutDir("observations.csv"), world.presences, prov);
  dataset::WriteTemporalRasters(files.OutDir("temporal.csv"), world.stack->temporal, prov);
  dataset::WriteStaticRasters(files.OutDir("static.csv"), world.stack->statics, prov);
  WriteOracle(files.OutDir("oracle.csv"), world.oracle,
              dataset::FeatureSchema::ForStack(*world.stack), prov);
  *ctx.out << "synth: " << world.presences.size() << " presences on "
           << world.stack->grid.size() << " cells\n";
}

void CmdIngest(Context& ctx) {
  Files files(ctx);
  const geo::Grid grid = ctx.config.GetGrid();
  const std::vector<Observation> rows =
      dataset::IngestObservations(files.In("observations", "observations.csv"));
  std::shared_ptr<dataset::RasterStack> stack;
  const bool with_rasters =
      !ctx.config.Get("temporal").empty() || !ctx.config.Get("world").empty();
  if (with_rasters) stack = LoadStack(ctx, files);

  std::size_t absences = 0, outside = 0, uncovered = 0;
  std::vector<Observation> kept;
  std::vector<double> scratch;
  for (const Observation& o : rows) {
    if (!o.presence) {
      ++absences;
      continue;
    }
    const auto cell = grid.Locate(o.location);
    if (!cell) {
      ++outside;
      continue;
    }
    if (stack) {
      scratch.resize(dataset::FeatureSchema::ForStack(*stack).size());
      try {
        dataset::AssembleFeaturesInto(*stack, *cell, o.date, scratch);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kCoverage) throw;
        ++uncovered;
        continue;
      }
    }
    kept.push_back(o);
  }
  const auto [train, test] = dataset::TemporalSplit<Observation>(kept, TrainEndYear(ctx));
  const std::string prov = Prov(ctx);
  dataset::WriteObservations(files.OutDir("observations.csv"), kept, prov);
  WriteFileAtomic(files.OutDir("ingest_summary.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\nitem,count\n"
        << "rows," << rows.size() << "\nabsence_rows," << absences
        << "\noutside_grid," << outside << "\nmissing_coverage," << uncovered
        << "\nkept," << kept.size() << "\ntrain," << train.size() << "\ntest,"
        << test.size() << '\n';
  });
  *ctx.out << "ingest: kept " << kept.size() << " of " << rows.size() << " rows ("
           << train.size() << " train, " << test.size() << " test)\n";
}

void CmdFeatures(Context& ctx) {
  Files files(ctx);
  const auto stack = LoadStack(ctx, files);
  const std::vector<Observation> presences = LoadPresences(ctx, files);
  const auto sets =
      LoadPseudoAbsences(files, ctx.config.GetList("pseudo_absences"), stack->grid);
  const auto schema =
      std::make_shared<const dataset::FeatureSchema>(dataset::FeatureSchema::ForStack(*stack));
  const int end_year = TrainEndYear(ctx);

  std::vector<dataset::LabeledDataset> out(2);
  out[0].split = dataset::Split::kTrain;
  out[1].split = dataset::Split::kTest;
  for (auto& d : out) d.schema = schema;
  auto add = [&](dataset::LabeledRow row) {
    out[YearOf(row.date) <= end_year ? 0 : 1].rows.push_back(std::move(row));
  };
  for (const Observation& o : presences) {
    add({dataset::AssembleFeatures(*stack, o).values, true, dataset::Origin::kObserved,
         o.date, o.location});
  }
  std::size_t pseudo = 0;
  for (const auto& set : sets) {
    const Matrix x = pa_gen::PointFeatures(*stack, set.points);
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      const auto& p = set.points[i];
      add({std::vector<double>(x.row(i).begin(), x.row(i).end()), false,
           dataset::OriginFor(p.method), p.date, p.location});
      ++pseudo;
    }
  }
  dataset::ExportDatasets(files.OutFile(), out, Prov(ctx));
  *ctx.out << "features: " << presences.size() << " presences and " << pseudo
           << " pseudo-absences, " << schema->size() << " features\n";
}

void CmdPagen(Context& ctx) {
  Files files(ctx);
  const Method method = MethodKey(ctx);
  pa_gen::PaConfig pa = PaKeys(ctx);
  const eval::ModelSettings models = ModelKeys(ctx);
  const auto stack = LoadStack(ctx, files);
  const std::vector<Observation> presences = SplitPresences(ctx, LoadPresences(ctx, files));
  if (presences.empty()) {
    throw Error(ErrorCode::kConfig, "no " + ctx.config.Get("split") + " presences");
  }

  pa_gen::Generated g;
  if (method == Method::kBs) {
    const pa_gen::SplitContext split(stack->grid, presences);
    const std::size_t n = pa.target_count.value_or(std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(models.background_multiplier *
                                              static_cast<double>(presences.size()))),
        stack->grid.size()));
    g.set = pa_gen::SampleBackground(stack->grid, n, split.first_date(), split.last_date(),
                                     DeriveSeed(pa.seed, HashString("BS")));
  } else {
    g = pa_gen::GenerateForMethod(*stack, presences, method, pa);
  }
  const fs::path out = files.OutFile();
  const std::string prov = Prov(ctx);
  pa_gen::ExportPseudoAbsences(out, g.set, prov);
  if (g.extent) {
    fs::path table = out;
    table += ".extent.csv";
    WriteFileAtomic(table, [&](std::ostream& o) {
      o << "# " << prov << "\n# selected_radius_km " << FormatDouble(g.extent->radius_km)
        << " vm " << FormatDouble(g.extent->fit.vm) << " k "
        << FormatDouble(g.extent->fit.k) << "\nradius_km,candidates,auc,skip_reason\n";
      for (const auto& r : g.extent->table) {
        o << FormatDouble(r.radius_km) << ',' << r.candidates << ','
          << (r.auc ? FormatDouble(*r.auc) : "") << ',' << r.skip_reason << '\n';
      }
    });
  }
  *ctx.out << "pagen: " << g.set.points.size() << ' ' << dataset::MethodName(method)
           << " points for " << presences.size() << " presences";
  if (g.extent) *ctx.out << ", extent " << FormatDouble(g.extent->radius_km) << " km";
  *ctx.out << '\n';
}

eval::Algorithm AlgorithmKey(const Context& ctx) {
  const auto a = eval::ParseAlgorithm(ctx.config.Get("algorithm"));
  if (!a) Usage("unknown algorithm '" + ctx.config.Get("algorithm") + "'");
  return *a;
}

void CmdTrain(Context& ctx) {
  Files files(ctx);
  const eval::Algorithm algorithm = AlgorithmKey(ctx);
  const eval::ModelSettings settings = ModelKeys(ctx);
  const auto pa_paths = ctx.config.GetList("pseudo_absences");
  if (pa_paths.size() != 1) Usage("train needs exactly one pseudo_absences file");
  const auto stack = LoadStack(ctx, files);
  const std::vector<Observation> presences = SplitPresences(ctx, LoadPresences(ctx, files));
  const auto set = LoadPseudoAbsences(files, pa_paths, stack->grid).front();
  const Matrix px = pa_gen::ObservationFeatures(*stack, presences);
  const Matrix nx = pa_gen::PointFeatures(*stack, set.points);
  const std::uint64_t seed = ctx.config.GetUint("seed");
  const std::string arm = std::string(eval::AlgorithmName(algorithm)) + ":" +
                          std::string(dataset::MethodName(set.method));

  models::TrainedModel trained;
  trained.schema = dataset::FeatureSchema::ForStack(*stack).names();
  if (algorithm == eval::Algorithm::kMaxent) {
    trained.model = models::MaxentFit(px, nx, settings.maxent);
  } else {
    Matrix x = px;
    x.Append(nx);
    std::vector<int> y(x.rows(), 0);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(px.rows()), 1);
    const std::uint64_t fit_seed = DeriveSeed(seed, HashString(arm));
    if (algorithm == eval::Algorithm::kLr) {
      trained.model = models::LrFit(x, y, settings.lr);
    } else if (algorithm == eval::Algorithm::kRf) {
      models::ForestOptions o = settings.rf;
      o.seed = fit_seed;
      trained.model = models::RfFit(x, y, o);
    } else {
      models::GbmOptions o = settings.gbm;
      o.seed = fit_seed;
      trained.model = models::GbmFit(x, y, o);
    }
  }
  models::SaveModelFile(files.OutFile(), trained, Prov(ctx));
  *ctx.out << "train: " << arm << " on " << px.rows() << " presences and " << nx.rows()
           << " negatives\n";
}

std::vector<eval::Arm> ArmsKey(const Context& ctx) {
  if (ctx.config.Get("arms") == "all") return eval::AllArms();
  std::vector<eval::Arm> arms;
  for (const std::string& name : ctx.config.GetList("arms")) {
    const auto arm = eval::ParseArm(name);
    if (!arm) Usage("unknown arm '" + name + "'");
    arms.push_back(*arm);
  }
  if (arms.empty()) Usage("no arms");
  return arms;
}

void CmdExperiment(Context& ctx) {
  Files files(ctx);
  const std::string& metric = ctx.config.Get("metric");
  if (metric != "accuracy" && metric != "f1" && metric != "all") {
    Usage("metric must be accuracy, f1 or all");
  }
  const std::string& labels = ctx.config.Get("test_labels");
  if (labels != "nominal" && labels != "oracle") Usage("test_labels must be nominal or oracle");
  eval::ExperimentConfig config;
  config.arms = ArmsKey(ctx);
  config.n_runs = PositiveInt(ctx, "runs");
  config.base_seed = ctx.config.GetUint("seed");
  config.pa = PaKeys(ctx);
  config.models = ModelKeys(ctx);
  config.jobs = ctx.jobs;

  eval::ExperimentInputs inputs;
  const auto stack = LoadStack(ctx, files);
  inputs.stack = stack;
  std::tie(inputs.train_presences, inputs.test_presences) =
      dataset::TemporalSplit<Observation>(LoadPresences(ctx, files), TrainEndYear(ctx));
  if (labels == "oracle") {
    std::shared_ptr<const dataset::SynthOracle> oracle =
        ReadOracle(files.In("oracle", "oracle.csv"), stack);
    inputs.oracle = [oracle](geo::CellId cell, Date date) { return oracle->Label(cell, date); };
  }

  const eval::ExperimentResult result = eval::RunExperiment(inputs, config);
  std::vector<eval::ResultsMatrix> matrices;
  if (metric != "f1") matrices.push_back(result.accuracy);
  if (metric != "accuracy") matrices.push_back(result.f1);

  const std::string prov = Prov(ctx);
  eval::ExportResults(files.OutDir("results.csv"), matrices, prov);
  WriteFileAtomic(files.OutDir("extents.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\nmethod,radius_km\n";
    for (const auto& [m, r] : result.extent_radius_km) {
      out << dataset::MethodName(m) << ',' << FormatDouble(r) << '\n';
    }
  });
  if (config.n_runs >= 2) {
    std::vector<eval::Summary> summaries;
    for (const auto& m : matrices) summaries.push_back(eval::Summarize(m));
    eval::ExportSummary(files.OutDir("summary.csv"), summaries, prov);
    const std::string table = eval::FormatTable(summaries);
    WriteText(files.OutDir("table.txt"), "# " + prov + "\n" + table);
    *ctx.out << table;
  } else {
    *ctx.out << "experiment: 1 run, no summary (needs at least 2)\n";
  }
}

void CmdStats(Context& ctx) {
  Files files(ctx);
  const std::string& metric = ctx.config.Get("metric");
  if (metric != "accuracy" && metric != "f1") Usage("stats needs metric accuracy or f1");
  const std::string& hypothesis = ctx.config.Get("hypothesis");
  if (hypothesis != "focused" && hypothesis != "posthoc") {
    Usage("hypothesis must be focused or posthoc");
  }
  const double alpha = ctx.config.GetDouble("alpha");
  if (!(alpha > 0 && alpha < 1)) Usage("alpha must lie in (0, 1)");
  const bool force = ctx.config.GetBool("force");

  const auto matrices = eval::ReadResults(files.In("results", ""));
  const auto it = std::find_if(matrices.begin(), matrices.end(),
                               [&](const auto& m) { return m.metric == metric; });
  if (it == matrices.end()) {
    throw Error(ErrorCode::kMissingArm, "results hold no '" + metric + "' values");
  }
  std::vector<std::string> arms = ctx.config.GetList("test_arms");

  stats::PosthocReport report;
  if (hypothesis == "focused") {
    if (arms.empty()) arms = stats::FocusedArms();
    report.omnibus = stats::FocusedTest(*it, arms, alpha);
  } else {
    stats::HypothesisSpec spec{arms, alpha, metric};
    spec.Validate();
    const std::vector<std::string> names = arms.empty() ? it->arms : arms;
    try {
      report = stats::PairwisePosthoc(*it, spec, stats::AllPairs(names), force);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOmnibusNotRejected) throw;
      report.omnibus = stats::FriedmanAlignedRanks(it->SelectArms(names).values, alpha);
      *ctx.out << "stats: omnibus not rejected, post-hoc tests skipped\n";
    }
  }
  stats::ExportReport(files.OutFile(), report, Prov(ctx));
  const auto& o = report.omnibus;
  *ctx.out << "stats: " << o.comparison << " statistic " << FormatDouble(o.statistic)
           << " p " << stats::FormatPValue(o) << (o.rejected ? " rejected" : " not rejected")
           << " at alpha " << FormatDouble(alpha) << '\n';
}

void CmdExplain(Context& ctx) {
  Files files(ctx);
  const int permutations = PositiveInt(ctx, "shap_permutations");
  const int background_rows = PositiveInt(ctx, "shap_background");
  const long long limit = ctx.config.GetInt("explain_limit");
  if (limit < 0) Usage("explain_limit must be >= 0");
  const models::TrainedModel trained = models::LoadModelFile(files.In("model", ""));
  const auto stack = LoadStack(ctx, files);
  const auto schema = dataset::FeatureSchema::ForStack(*stack);
  if (trained.schema != schema.names()) {
    throw Error(ErrorCode::kSchemaMismatch, "model schema differs from the raster stack");
  }
  const std::vector<Observation> presences = SplitPresences(ctx, LoadPresences(ctx, files));
  Matrix x = pa_gen::ObservationFeatures(*stack, presences);
  for (const auto& set :
       LoadPseudoAbsences(files, ctx.config.GetList("pseudo_absences"), stack->grid)) {
    x.Append(pa_gen::PointFeatures(*stack, set.points));
  }
  if (x.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no rows to explain");
  const std::size_t n = limit > 0 ? std::min<std::size_t>(limit, x.rows()) : x.rows();

  const std::uint64_t seed = ctx.config.GetUint("seed");
  const auto* linear = std::get_if<models::LinearModel>(&trained.model);
  Matrix background;
  if (linear) {
    background = x;
  } else {
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(DeriveSeed(seed, HashString("shap-background")));
    Shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), background_rows));
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) background.AppendRow(x.row(i));
  }

  std::vector<explain::Attribution> attributions(n);
  ParallelFor(n, ctx.jobs, [&](std::size_t i) {
    attributions[i] = linear ? explain::LinearShap(*linear, background, x.row(i))
                             : explain::SamplingShap(trained.model, background, x.row(i),
                                                     permutations, DeriveSeed(seed, i));
  });

  const std::string prov = Prov(ctx);
  WriteFileAtomic(files.OutDir("attributions.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\n# base_value " << FormatDouble(attributions[0].base_value)
        << "\nrow,feature,value,phi\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < schema.size(); ++j) {
        out << i << ',' << schema.names()[j] << ',' << FormatDouble(x(i, j)) << ','
            << FormatDouble(attributions[i].phi[j]) << '\n';
      }
    }
  });
  const auto ranking = explain::RankFeatures(attributions, schema.names());
  explain::ExportRanking(files.OutDir("ranking.csv"), ranking, prov);
  *ctx.out << "explain: " << n << " rows, top feature " << ranking.front().name << '\n';
}

// Plots -----------------------------------------------------------------------

void PlotPaMap(Context& ctx, Files& files) {
  const std::vector<std::string> inputs = ctx.config.GetList("inputs");
  if (inputs.empty()) Usage("pa_map needs pseudo-absence files in 'inputs'");
  const geo::Grid grid = ctx.config.GetGrid();
  const std::vector<Observation> presences = SplitPresences(ctx, LoadPresences(ctx, files));
  const auto sets = LoadPseudoAbsences(files, inputs, grid);
  const std::string prov = Prov(ctx);

  WriteFileAtomic(files.OutDir("pa_points.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\npanel,kind,lat,lon\n";
    for (const auto& set : sets) {
      const std::string panel(dataset::MethodName(set.method));
      for (const auto& o : presences) {
        out << panel << ",presence," << FormatDouble(o.location.lat) << ','
            << FormatDouble(o.location.lon) << '\n';
      }
      for (const auto& p : set.points) {
        out << panel << ",pseudo_absence," << FormatDouble(p.location.lat) << ','
            << FormatDouble(p.location.lon) << '\n';
      }
    }
  });

  const geo::BBox& b = grid.bbox();
  const double side = 260, pad = 30, top = 46;
  const double lat_span = b.lat_max - b.lat_min, lon_span = b.lon_max - b.lon_min;
  const double scale = side / std::max(lat_span, lon_span);
  const double w = lon_span * scale, h = lat_span * scale;
  Svg svg(pad + sets.size() * (w + pad), top + h + 40, prov);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const double x0 = pad + k * (w + pad);
    auto px = [&](const geo::GeoPoint& p) { return x0 + (p.lon - b.lon_min) * scale; };
    auto py = [&](const geo::GeoPoint& p) { return top + (b.lat_max - p.lat) * scale; };
    svg.Rect(x0, top, w, h, "#f4f1e8", "#555555");
    svg.Text(x0 + w / 2, top - 12,
             std::string(dataset::MethodName(sets[k].method)) + " (" +
                 std::to_string(sets[k].points.size()) + ")",
             14, "middle");
    for (const auto& p : sets[k].points) svg.Circle(px(p.location), py(p.location), 2.2, "#2b6cb0", 0.8);
    for (const auto& o : presences) svg.Circle(px(o.location), py(o.location), 2.2, "#c53030", 0.9);
  }
  svg.Circle(pad + 6, top + h + 22, 4, "#c53030");
  svg.Text(pad + 14, top + h + 26, "presence", 12);
  svg.Circle(pad + 96, top + h + 22, 4, "#2b6cb0");
  svg.Text(pad + 104, top + h + 26, "pseudo-absence", 12);
  WriteText(files.OutDir("pa_map.svg"), svg.Finish());
  *ctx.out << "plot: " << sets.size() << " pseudo-absence panels\n";
}

void PlotShap(Context& ctx, Files& files) {
  const int top_k = PositiveInt(ctx, "top_features");
  const fs::path dir = files.In("explanation", "");
  struct Ranked {
    std::string feature;
    double mean_abs_phi, cum_share;
  };
  std::vector<Ranked> ranking;
  auto num = [](std::string_view v, const fs::path& p, std::size_t line) {
    const auto d = ParseDouble(v);
    if (!d) throw Error(ErrorCode::kParse, p.string() + ":" + std::to_string(line) + ": bad number");
    return *d;
  };
  const fs::path rank_path = files.Existing(dir / "ranking.csv");
  ReadCsv(rank_path, {"feature", "mean_abs_phi", "cum_share"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 3) throw Error(ErrorCode::kParse, rank_path.string() + ":" + std::to_string(line) + ": expected 3 fields");
            ranking.push_back({std::string(f[0]), num(f[1], rank_path, line), num(f[2], rank_path, line)});
          });
  if (ranking.empty()) throw Error(ErrorCode::kEmptyEvaluation, "empty ranking");
  ranking.resize(std::min<std::size_t>(ranking.size(), top_k));
  std::map<std::string, std::size_t, std::less<>> slot;
  for (std::size_t k = 0; k < ranking.size(); ++k) slot[ranking[k].feature] = k;

  struct Point {
    long long row;
    double value, phi;
  };
  std::vector<std::vector<Point>> points(ranking.size());
  const fs::path attr_path = files.Existing(dir / "attributions.csv");
  ReadCsv(attr_path, {"row", "feature", "value", "phi"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 4) throw Error(ErrorCode::kParse, attr_path.string() + ":" + std::to_string(line) + ": expected 4 fields");
            const auto it = slot.find(f[1]);
            if (it == slot.end()) return;
            const auto row = ParseInt(f[0]);
            if (!row) throw Error(ErrorCode::kParse, attr_path.string() + ":" + std::to_string(line) + ": bad row");
            points[it->second].push_back({*row, num(f[2], attr_path, line), num(f[3], attr_path, line)});
          });

  const std::string prov = Prov(ctx);
  WriteFileAtomic(files.OutDir("shap_summary.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\nfeature,mean_abs_phi,cum_share\n";
    for (const auto& r : ranking) {
      out << r.feature << ',' << FormatDouble(r.mean_abs_phi) << ',' << FormatDouble(r.cum_share) << '\n';
    }
  });
  // Feature values scaled to [0, 1] per feature colour the swarm.
  std::vector<std::vector<double>> scaled(ranking.size());
  double phi_max = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points[k]) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
      phi_max = std::max(phi_max, std::abs(p.phi));
    }
    for (const auto& p : points[k]) scaled[k].push_back(hi > lo ? (p.value - lo) / (hi - lo) : 0.5);
  }
  WriteFileAtomic(files.OutDir("shap_points.csv"), [&](std::ostream& out) {
    out << "# " << prov << "\nfeature,row,phi,value_scaled\n";
    for (std::size_t k = 0; k < ranking.size(); ++k) {
      for (std::size_t i = 0; i < points[k].size(); ++i) {
        out << ranking[k].feature << ',' << points[k][i].row << ','
            << FormatDouble(points[k][i].phi) << ',' << FormatDouble(scaled[k][i]) << '\n';
      }
    }
  });

  const double row_h = 22, top = 50, label_w = 230, bar_w = 200, gap = 50, swarm_w = 340;
  const double height = top + row_h * ranking.size() + 50;
  Svg svg(label_w + bar_w + gap + swarm_w + 30, height, prov);
  svg.Text(label_w + bar_w / 2, 24, "mean |phi|", 13, "middle");
  svg.Text(label_w + bar_w + gap + swarm_w / 2, 24, "phi (log-odds)", 13, "middle");
  const double bar_max = ranking.front().mean_abs_phi > 0 ? ranking.front().mean_abs_phi : 1.0;
  const double x_mid = label_w + bar_w + gap + swarm_w / 2;
  const double half = swarm_w / 2 - 6;
  const double phi_scale = phi_max > 0 ? half / phi_max : 0.0;
  svg.Line(x_mid, top - 8, x_mid, top + row_h * ranking.size(), "#999999");
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    const double y = top + row_h * k + row_h / 2;
    svg.Text(label_w - 8, y + 4, ranking[k].feature, 11, "end");
    svg.Rect(label_w, y - 7, bar_w * ranking[k].mean_abs_phi / bar_max, 14, "#4a5568");
    for (std::size_t i = 0; i < points[k].size(); ++i) {
      const double jitter =
          (static_cast<double>(Mix64(static_cast<std::uint64_t>(points[k][i].row)) % 1000) / 999.0 - 0.5) *
          (row_h - 8);
      svg.Circle(x_mid + points[k][i].phi * phi_scale, y + jitter, 2.0, Ramp(scaled[k][i]), 0.8);
    }
  }
  const double ly = top + row_h * ranking.size() + 30;
  svg.Text(label_w + bar_w + gap, ly, "low value", 11);
  for (int s = 0; s <= 10; ++s) {
    svg.Rect(label_w + bar_w + gap + 70 + s * 10, ly - 9, 10, 10, Ramp(s / 10.0));
  }
  svg.Text(label_w + bar_w + gap + 190, ly, "high value", 11);
  WriteText(files.OutDir("shap.svg"), svg.Finish());
  *ctx.out << "plot: " << ranking.size() << " features\n";
}

void CmdPlot(Context& ctx) {
  Files files(ctx);
  const std::string& kind = ctx.config.Get("plot");
  if (kind == "pa_map") {
    PlotPaMap(ctx, files);
  } else if (kind == "shap") {
    PlotShap(ctx, files);
  } else {
    Usage("plot must be pa_map or shap");
  }
}

void CmdVerify(Context& ctx) {
  Files files(ctx);
  const auto paths = ctx.config.GetList("pseudo_absences");
  if (paths.empty()) Usage("verify needs pseudo_absences");
  const double buffer = ctx.config.GetDouble("buffer_km");
  const geo::Grid grid = ctx.config.GetGrid();
  const std::vector<Observation> presences = SplitPresences(ctx, LoadPresences(ctx, files));
  if (presences.empty()) throw Error(ErrorCode::kConfig, "no presences to check against");
  for (const auto& set : LoadPseudoAbsences(files, paths, grid)) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    for (const auto& p : set.points) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& o : presences) {
        nearest = std::min(nearest, geo::HaversineKm(p.location, o.location));
      }
      best = std::min(best, nearest);
      violations += nearest < buffer;
    }
    if (violations > 0) {
      throw CommandFailure("BufferViolation",
                           std::to_string(violations) + " of " +
                               std::to_string(set.points.size()) + " points closer than " +
                               FormatDouble(buffer) + " km (min " + FormatDouble(best) + " km)");
    }
    *ctx.out << "verify: ok " << set.points.size() << " "
             << dataset::MethodName(set.method) << " points, " << presences.size()
             << " presences, min distance " << FormatDouble(best) << " km >= "
             << FormatDouble(buffer) << " km\n";
  }
}

struct SubcommandInfo {
  std::string_view name;
  std::string_view help;
  void (*run)(Context&);
};

const std::vector<SubcommandInfo>& Table() {
  static const std::vector<SubcommandInfo> kTable = {
      {"synth", "generate a virtual-species world", CmdSynth},
      {"ingest", "validate observations and split them by year", CmdIngest},
      {"features", "assemble labeled feature rows", CmdFeatures},
      {"pagen", "generate pseudo-absences or background points", CmdPagen},
      {"train", "fit one model", CmdTrain},
      {"experiment", "repeated runs over algorithm x method arms", CmdExperiment},
      {"stats", "aligned-ranks hypothesis tests on experiment results", CmdStats},
      {"explain", "Shapley attributions of a trained model", CmdExplain},
      {"plot", "plot data and SVG figures", CmdPlot},
      {"verify", "check the exclusion buffer of pseudo-absence files", CmdVerify},
  };
  return kTable;
}

std::string OneLine(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

const std::vector<std::string_view>& Subcommands() {
  static const std::vector<std::string_view> kNames = [] {
    std::vector<std::string_view> v;
    for (const auto& s : Table()) v.push_back(s.name);
    return v;
  }();
  return kNames;
}

void Dispatch(Context& ctx) {
  for (const auto& s : Table()) {
    if (s.name == ctx.subcommand) return s.run(ctx);
  }
  Usage("unknown subcommand '" + ctx.subcommand + "'");
}

namespace {

std::string Dashed(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

struct Parsed {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  int jobs = 1;
  std::string replay_file;
};

void AddCommonOptions(CLI::App* sub, Parsed& p, bool with_keys) {
  sub->add_option("-c,--config", p.config_file, "flat key = value configuration file");
  sub->add_option("--jobs", p.jobs, "worker threads for experiments and explanations")
      ->check(CLI::PositiveNumber);
  if (!with_keys) return;
  sub->add_option("--set", p.sets, "override as key=value, repeatable")->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  for (const KeySpec& k : ConfigKeys()) {
    std::string names = "--" + Dashed(k.name);
    if (Dashed(k.name) != k.name) names += ",--" + std::string(k.name);
    sub->add_option_function<std::string>(
           names, [&p, key = std::string(k.name)](const std::string& v) { p.flags[key] = v; },
           std::string(k.help))
        ->option_text("VALUE");
  }
}

RunConfig BuildConfig(const Parsed& p) {
  RunConfig c = RunConfig::Defaults();
  if (!p.config_file.empty()) c.LoadFile(p.config_file);
  for (const std::string& s : p.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) Usage("--set expects key=value, got '" + s + "'");
    c.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : p.flags) c.Set(k, v);
  return c;
}

void Replay(const Parsed& p, std::ostream& out) {
  std::ifstream in(p.replay_file);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.replay_file);
  std::string line;
  std::getline(in, line);
  if (line.starts_with("<!-- ")) line = line.substr(5, line.rfind(" -->") - 5);
  Context ctx;
  ctx.subcommand = RunConfig::ParseProvenance(line, &ctx.config);
  // The output location is not part of the recorded configuration.
  RunConfig overrides = BuildConfig(p);
  ctx.config.Set("out", overrides.Get("out"));
  ctx.jobs = p.jobs;
  ctx.out = &out;
  Dispatch(ctx);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-absence generation and evaluation for presence-only species data",
               std::string(kToolName)};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LOCUST_SDM_VERSION));
  Parsed parsed;
  for (const auto& s : Table()) {
    AddCommonOptions(app.add_subcommand(std::string(s.name), std::string(s.help)), parsed,
                     true);
  }
  CLI::App* replay = app.add_subcommand(
      "replay", "re-run the command recorded in an output's provenance header");
  replay->add_option("file", parsed.replay_file, "any output file")->required();
  replay->add_option("--out", [&](const CLI::results_t& r) {
    parsed.flags["out"] = r.front();
    return true;
  }, "output file or directory")->required();
  replay->add_option("--jobs", parsed.jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help and --version.
      return app.exit(e, out, err);
    }
    err << "error: " << ErrorCodeName(ErrorCode::kUsage) << ": " << OneLine(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    if (replay->parsed()) {
      Replay(parsed, out);
      return kExitOk;
    }
    Context ctx;
    ctx.subcommand = app.get_subcommands().front()->get_name();
    ctx.config = BuildConfig(parsed);
    ctx.jobs = parsed.jobs;
    ctx.out = &out;
    Dispatch(ctx);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << OneLine(e.what()) << '\n';
    return e.code() == ErrorCode::kUsage ? kExitUsage : kExitData;
  } catch (const CommandFailure& e) {
    err << "error: " << e.code << ": " << OneLine(e.what()) << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << ErrorCodeName(ErrorCode::kIo) << ": " << OneLine(e.what()) << '\n';
    return kExitData;
  }
}

}  // namespace locust_sdm::cli
