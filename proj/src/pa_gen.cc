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

#include "locust_sdm/pa_gen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/metrics.h"
#include "locust_sdm/random.h"

namespace locust_sdm::pa_gen {

namespace {

std::uint64_t MethodStream(std::uint64_t seed, Method method) {
  return DeriveSeed(seed, HashString(dataset::MethodName(method)));
}

std::size_t TargetCount(const SplitContext& ctx, const PaConfig& cfg) {
  return cfg.target_count.value_or(ctx.presences().size());
}

}  // namespace

void PaConfig::Validate() const {
  if (!(exclusion_buffer_km >= 0.0) || !std::isfinite(exclusion_buffer_km)) {
    throw Error(ErrorCode::kConfig, "exclusion buffer must be >= 0");
  }
  if (target_count && *target_count == 0) {
    throw Error(ErrorCode::kConfig, "target count must be >= 1");
  }
  if (extent_radii_km.empty()) {
    throw Error(ErrorCode::kConfig, "extent radii ladder is empty");
  }
  for (std::size_t i = 0; i < extent_radii_km.size(); ++i) {
    if (!(extent_radii_km[i] > 0.0) ||
        (i > 0 && !(extent_radii_km[i] > extent_radii_km[i - 1]))) {
      throw Error(ErrorCode::kConfig,
                  "extent radii must be positive and strictly increasing");
    }
  }
  if (!(extent_threshold > 0.0 && extent_threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "extent threshold must lie in (0, 1]");
  }
  if (!(ocsvm.nu > 0.0 && ocsvm.nu <= 1.0)) {
    throw Error(ErrorCode::kConfig, "profiling nu must lie in (0, 1]");
  }
  if (ocsvm.feature_prefixes.empty()) {
    throw Error(ErrorCode::kConfig, "profiling feature subset is empty");
  }
}

std::string PaConfig::Snapshot() const {
  std::ostringstream s;
  s << "buffer_km=" << FormatDouble(exclusion_buffer_km) << ";target="
    << (target_count ? std::to_string(*target_count) : "match-presences")
    << ";nu=" << FormatDouble(ocsvm.nu) << ";gamma="
    << (ocsvm.gamma > 0.0 ? FormatDouble(ocsvm.gamma) : "auto")
    << ";profile_features=";
  for (std::size_t i = 0; i < ocsvm.feature_prefixes.size(); ++i) {
    s << (i ? "|" : "") << ocsvm.feature_prefixes[i] << "*";
  }
  s << ";radii_km=";
  for (std::size_t i = 0; i < extent_radii_km.size(); ++i) {
    s << (i ? "|" : "") << FormatDouble(extent_radii_km[i]);
  }
  s << ";extent_threshold=" << FormatDouble(extent_threshold)
    << ";quick_model=lr;curve=michaelis-menten";
  return s.str();
}

SplitContext::SplitContext(const geo::Grid& grid,
                           std::span<const dataset::Observation> presences)
    : grid_(grid), presences_(presences.begin(), presences.end()) {
  if (presences_.empty()) {
    throw Error(ErrorCode::kConfig, "split has no presences");
  }
  std::vector<Date> dates;
  for (const auto& p : presences_) {
    if (!grid_.Locate(p.location)) {
      throw Error(ErrorCode::kOutOfBounds,
                  "presence " + std::to_string(p.id) + " lies outside the grid");
    }
    dates.push_back(p.date);
  }
  std::sort(dates.begin(), dates.end());
  first_date_ = dates.front();
  last_date_ = dates.back();
  median_date_ = dates[(dates.size() - 1) / 2];
  nearest_km_ = geo::NearestDistanceKm(grid_, presence_points());
}

std::vector<geo::GeoPoint> SplitContext::presence_points() const {
  std::vector<geo::GeoPoint> out;
  out.reserve(presences_.size());
  for (const auto& p : presences_) out.push_back(p.location);
  return out;
}

geo::CellMask SplitContext::OutsideBuffer(double buffer_km) const {
  geo::CellMask m(grid_, false);
  for (geo::CellId c = 0; c < grid_.size(); ++c) {
    m.Set(c, nearest_km_[c] > buffer_km);
  }
  return m;
}

geo::CellMask SplitContext::Extent(double radius_km) const {
  geo::CellMask m(grid_, false);
  for (geo::CellId c = 0; c < grid_.size(); ++c) {
    m.Set(c, nearest_km_[c] <= radius_km);
  }
  return m;
}

PseudoAbsenceSet SampleFromMask(const geo::Grid& grid,
                                const geo::CellMask& candidates,
                                std::size_t count, Date first, Date last,
                                Method method, std::uint64_t seed) {
  if (candidates.grid_id() != grid.Fingerprint()) {
    throw Error(ErrorCode::kSchemaMismatch, "candidate mask is for another grid");
  }
  if (last < first) throw Error(ErrorCode::kConfig, "empty date range");
  std::vector<geo::CellId> cells = candidates.Cells();
  if (cells.size() < count) {
    throw Error(ErrorCode::kInsufficientCandidates,
                std::string(dataset::MethodName(method)) + ": " +
                    std::to_string(cells.size()) + " candidate cells for " +
                    std::to_string(count) + " points (shortfall " +
                    std::to_string(count - cells.size()) + ")");
  }
  Rng rng(seed);
  const auto span_days = static_cast<std::uint64_t>((last - first).count()) + 1;
  PseudoAbsenceSet out;
  out.method = method;
  out.seed = seed;
  out.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + UniformIndex(rng, cells.size() - i);
    std::swap(cells[i], cells[j]);
    PaPoint p;
    p.cell = cells[i];
    p.location = grid.Center(p.cell);
    p.date = first + std::chrono::days(UniformIndex(rng, span_days));
    p.method = method;
    p.seed = seed;
    out.points.push_back(p);
  }
  return out;
}

namespace {

PseudoAbsenceSet SampleMethod(const SplitContext& ctx, const geo::CellMask& mask,
                              const PaConfig& cfg, Method method) {
  PseudoAbsenceSet out =
      SampleFromMask(ctx.grid(), mask, TargetCount(ctx, cfg), ctx.first_date(),
                     ctx.last_date(), method, MethodStream(cfg.seed, method));
  out.seed = cfg.seed;
  for (PaPoint& p : out.points) p.seed = cfg.seed;
  out.config_snapshot = cfg.Snapshot();
  return out;
}

}  // namespace

PseudoAbsenceSet SampleRs(const SplitContext& ctx, const PaConfig& cfg) {
  cfg.Validate();
  return SampleMethod(ctx, ctx.OutsideBuffer(cfg.exclusion_buffer_km), cfg,
                      Method::kRs);
}

std::vector<std::size_t> ProfileColumns(const dataset::FeatureSchema& schema,
                                        const OcsvmSettings& settings) {
  std::vector<std::size_t> cols;
  for (const auto& prefix : settings.feature_prefixes) {
    for (std::size_t c : schema.IndicesWithPrefix(prefix)) cols.push_back(c);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.empty()) {
    throw Error(ErrorCode::kConfig, "no schema column matches the profiling features");
  }
  return cols;
}

Profile ProfileUnsuitable(const geo::Grid& grid, const Matrix& presence_features,
                          const Matrix& grid_features,
                          const dataset::FeatureSchema& schema,
                          const OcsvmSettings& settings) {
  if (grid_features.rows() != grid.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "grid feature rows differ from the cell count");
  }
  if (presence_features.cols() != schema.size() ||
      grid_features.cols() != schema.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "feature width differs from the schema");
  }
  Profile out;
  out.columns = ProfileColumns(schema, settings);
  models::OcsvmOptions options;
  options.nu = settings.nu;
  options.gamma = settings.gamma;
  out.model = models::OcsvmFit(presence_features.SelectColumns(out.columns),
                               options);
  const Matrix g = grid_features.SelectColumns(out.columns);
  out.decision.resize(grid.size());
  out.unsuitable = geo::CellMask(grid, false);
  for (geo::CellId c = 0; c < grid.size(); ++c) {
    out.decision[c] = out.model.Decision(g.row(c));
    out.unsuitable.Set(c, out.decision[c] < 0.0);
  }
  return out;
}

Matrix GridFeatures(const dataset::RasterStack& stack, Date date) {
  const std::size_t width =
      stack.temporal.size() * dataset::kBucketsPerVariable + stack.statics.size();
  Matrix out(stack.grid.size(), width);
  for (geo::CellId c = 0; c < stack.grid.size(); ++c) {
    dataset::AssembleFeaturesInto(stack, c, date, out.row(c));
  }
  return out;
}

PseudoAbsenceSet SampleRsep(const SplitContext& ctx, const Profile& profile,
                            const PaConfig& cfg) {
  cfg.Validate();
  return SampleMethod(
      ctx, ctx.OutsideBuffer(cfg.exclusion_buffer_km) & profile.unsuitable, cfg,
      Method::kRsep);
}

SaturationFit FitSaturation(std::span<const double> radii,
                            std::span<const double> auc) {
  if (radii.empty() || radii.size() != auc.size()) {
    throw Error(ErrorCode::kConfig, "saturation fit needs matching points");
  }
  // For fixed k the optimal vm is linear least squares; k is searched on a
  // log grid and refined by golden section.
  auto vm_for = [&](double k) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double f = radii[i] / (k + radii[i]);
      num += auc[i] * f;
      den += f * f;
    }
    return num / den;
  };
  auto sse = [&](double log_k) {
    const double k = std::exp(log_k);
    const double vm = vm_for(k);
    double s = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double e = auc[i] - vm * radii[i] / (k + radii[i]);
      s += e * e;
    }
    return s;
  };
  const auto [rmin, rmax] = std::minmax_element(radii.begin(), radii.end());
  const double lo = std::log(*rmin * 1e-6);
  const double hi = std::log(*rmax * 1e4);
  constexpr int kGrid = 400;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double s = sse(lo + (hi - lo) * i / kGrid);
    if (s < best_sse) {
      best_sse = s;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
  double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = sse(c);
  double fd = sse(d);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = sse(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = sse(d);
    }
  }
  SaturationFit fit;
  fit.k = std::exp(0.5 * (a + b));
  fit.vm = vm_for(fit.k);
  return fit;
}

double SelectExtentRadius(std::span<const ExtentRow> table, double threshold,
                          SaturationFit* fit) {
  std::vector<double> radii;
  std::vector<double> auc;
  for (const ExtentRow& row : table) {
    if (row.auc) {
      radii.push_back(row.radius_km);
      auc.push_back(*row.auc);
    }
  }
  if (radii.empty()) {
    throw Error(ErrorCode::kNoViableExtent,
                "every extent radius was skipped");
  }
  const SaturationFit f = FitSaturation(radii, auc);
  if (fit) *fit = f;
  for (double r : radii) {
    if (f.Predict(r) >= threshold * f.vm) return r;
  }
  return radii.back();
}

ExtentResult OptimizeExtent(const SplitContext& ctx, const geo::CellMask& base,
                            const PaConfig& cfg, const QuickModel& quick_model) {
  cfg.Validate();
  const std::size_t count = TargetCount(ctx, cfg);
  ExtentResult out;
  for (std::size_t i = 0; i < cfg.extent_radii_km.size(); ++i) {
    ExtentRow row;
    row.radius_km = cfg.extent_radii_km[i];
    const geo::CellMask candidates = base & ctx.Extent(row.radius_km);
    row.candidates = candidates.Count();
    if (row.candidates < count) {
      row.skip_reason = "insufficient candidates (" +
                        std::to_string(row.candidates) + " < " +
                        std::to_string(count) + ")";
      out.table.push_back(std::move(row));
      continue;
    }
    const std::uint64_t seed = DeriveSeed(cfg.seed, 0x5e1ec7 + i);
    // The method tag does not influence the quick model.
    const PseudoAbsenceSet sample =
        SampleFromMask(ctx.grid(), candidates, count, ctx.first_date(),
                       ctx.last_date(), Method::kRsPlus, seed);
    try {
      row.auc = quick_model(sample, seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSingleClass) throw;
      row.skip_reason = "degenerate validation split";
    }
    out.table.push_back(std::move(row));
  }
  out.radius_km = SelectExtentRadius(out.table, cfg.extent_threshold, &out.fit);
  out.mask = ctx.Extent(out.radius_km);
  return out;
}

Matrix PointFeatures(const dataset::RasterStack& stack,
                     std::span<const PaPoint> points) {
  const std::size_t width =
      stack.temporal.size() * dataset::kBucketsPerVariable + stack.statics.size();
  Matrix out(points.size(), width);
  for (std::size_t i = 0; i < points.size(); ++i) {
    dataset::AssembleFeaturesInto(stack, points[i].cell, points[i].date,
                                  out.row(i));
  }
  return out;
}

QuickModel MakeLrQuickModel(const dataset::RasterStack& stack,
                            const Matrix& presence_features) {
  return [&stack, presence_features](const PseudoAbsenceSet& set,
                                     std::uint64_t seed) {
    Matrix x = presence_features;
    x.Append(PointFeatures(stack, set.points));
    std::vector<int> y(x.rows(), 0);
    std::fill(y.begin(), y.begin() + presence_features.rows(), 1);
    std::vector<std::size_t> index(x.rows());
    std::iota(index.begin(), index.end(), 0);
    const auto [train, val] =
        dataset::TrainValSplit<std::size_t>(index, 0.8, seed);
    std::vector<int> y_train;
    std::vector<int> y_val;
    for (std::size_t i : train) y_train.push_back(y[i]);
    for (std::size_t i : val) y_val.push_back(y[i]);
    const models::LinearModel model =
        models::LrFit(x.SelectRows(train), y_train);
    const Matrix xv = x.SelectRows(val);
    std::vector<double> scores(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      scores[i] = model.Probability(xv.row(i));
    }
    return eval::Auc(scores, y_val);
  };
}

PseudoAbsenceSet SampleRsPlus(const SplitContext& ctx,
                              const ExtentResult& extent, const PaConfig& cfg) {
  cfg.Validate();
  PseudoAbsenceSet out = SampleMethod(
      ctx, ctx.OutsideBuffer(cfg.exclusion_buffer_km) & extent.mask, cfg,
      Method::kRsPlus);
  out.extent_radius_km = extent.radius_km;
  return out;
}

PseudoAbsenceSet SampleRsepPlus(const SplitContext& ctx, const Profile& profile,
                                const ExtentResult& extent,
                                const PaConfig& cfg) {
  cfg.Validate();
  PseudoAbsenceSet out =
      SampleMethod(ctx,
                   ctx.OutsideBuffer(cfg.exclusion_buffer_km) &
                       profile.unsuitable & extent.mask,
                   cfg, Method::kRsepPlus);
  out.extent_radius_km = extent.radius_km;
  return out;
}

PseudoAbsenceSet SampleBackground(const geo::Grid& grid, std::size_t n,
                                  Date first, Date last, std::uint64_t seed) {
  PseudoAbsenceSet out =
      SampleFromMask(grid, geo::CellMask(grid, true), n, first, last,
                     Method::kBs, MethodStream(seed, Method::kBs));
  out.seed = seed;
  for (PaPoint& p : out.points) p.seed = seed;
  out.config_snapshot = "background;n=" + std::to_string(n);
  return out;
}

PseudoAbsenceSet BuildTestMixture(
    const std::map<Method, PseudoAbsenceSet>& per_method, std::size_t n_total,
    std::uint64_t seed) {
  const auto& methods = dataset::PseudoAbsenceMethods();
  PseudoAbsenceSet out;
  out.method = Method::kMixed;
  out.seed = seed;
  out.config_snapshot = "mixture;n_total=" + std::to_string(n_total);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto it = per_method.find(methods[m]);
    if (it == per_method.end()) {
      throw Error(ErrorCode::kConfig,
                  std::string("test mixture lacks method ") +
                      std::string(dataset::MethodName(methods[m])));
    }
    const std::size_t want =
        n_total / methods.size() + (m < n_total % methods.size() ? 1 : 0);
    const auto& points = it->second.points;
    if (points.size() < want) {
      throw Error(ErrorCode::kInsufficientCandidates,
                  std::string(dataset::MethodName(methods[m])) + " has " +
                      std::to_string(points.size()) + " points, mixture needs " +
                      std::to_string(want));
    }
    std::vector<std::size_t> index(points.size());
    std::iota(index.begin(), index.end(), 0);
    Rng rng(DeriveSeed(seed, m));
    for (std::size_t i = 0; i < want; ++i) {
      std::swap(index[i], index[i + UniformIndex(rng, index.size() - i)]);
      out.points.push_back(points[index[i]]);
    }
  }
  Rng rng(DeriveSeed(seed, methods.size()));
  Shuffle(out.points.begin(), out.points.end(), rng);
  return out;
}

void ExportPseudoAbsences(const std::filesystem::path& path,
                          const PseudoAbsenceSet& set,
                          const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    if (!set.config_snapshot.empty()) out << "# " << set.config_snapshot << '\n';
    if (set.extent_radius_km) {
      out << "# extent_radius_km=" << FormatDouble(*set.extent_radius_km) << '\n';
    }
    out << "lat,lon,date,method,seed\n";
    for (const PaPoint& p : set.points) {
      out << FormatDouble(p.location.lat) << ',' << FormatDouble(p.location.lon)
          << ',' << FormatDate(p.date) << ',' << dataset::MethodName(p.method)
          << ',' << p.seed << '\n';
    }
  });
}

PseudoAbsenceSet ReadPseudoAbsences(const std::filesystem::path& path,
                                    const geo::Grid& grid) {
  PseudoAbsenceSet out;
  bool first = true;
  ReadCsv(path, {"lat", "lon", "date", "method", "seed"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            const std::string where = path.string() + ":" + std::to_string(line);
            if (f.size() != 5) {
              throw Error(ErrorCode::kParse, where + ": expected 5 fields");
            }
            const auto lat = ParseDouble(f[0]);
            const auto lon = ParseDouble(f[1]);
            const auto date = ParseDate(f[2]);
            const auto method = dataset::ParseMethod(f[3]);
            std::uint64_t seed = 0;
            const auto [end, ec] =
                std::from_chars(f[4].data(), f[4].data() + f[4].size(), seed);
            if (!lat || !lon || !date || !method || ec != std::errc() ||
                end != f[4].data() + f[4].size()) {
              throw Error(ErrorCode::kParse, where + ": malformed row");
            }
            PaPoint p;
            p.location = geo::GeoPoint::Make(*lat, *lon);
            const auto cell = grid.Locate(p.location);
            if (!cell) {
              throw Error(ErrorCode::kOutOfBounds, where + ": outside the grid");
            }
            p.cell = *cell;
            p.date = *date;
            p.method = *method;
            p.seed = seed;
            if (first) {
              out.method = p.method;
              out.seed = p.seed;
              first = false;
            } else if (out.method != p.method) {
              out.method = Method::kMixed;
            }
            out.points.push_back(p);
          });
  return out;
}

Matrix ObservationFeatures(const dataset::RasterStack& stack,
                           std::span<const dataset::Observation> observations) {
  Matrix x;
  for (const auto& o : observations) {
    x.AppendRow(dataset::AssembleFeatures(stack, o).values);
  }
  return x;
}

Generated GenerateForMethod(const dataset::RasterStack& stack,
                            std::span<const dataset::Observation> presences,
                            Method method, const PaConfig& cfg) {
  if (method == Method::kBs || method == Method::kMixed) {
    throw Error(ErrorCode::kConfig, "not a pseudo-absence method");
  }
  cfg.Validate();
  const SplitContext ctx(stack.grid, presences);
  Generated g;
  if (method == Method::kRs) {
    g.set = SampleRs(ctx, cfg);
    return g;
  }
  const Matrix presence_x = ObservationFeatures(stack, presences);
  const bool profiled = method == Method::kRsep || method == Method::kRsepPlus;
  if (profiled) {
    g.profile = ProfileUnsuitable(stack.grid, presence_x,
                                  GridFeatures(stack, ctx.median_date()),
                                  dataset::FeatureSchema::ForStack(stack), cfg.ocsvm);
  }
  if (method == Method::kRsep) {
    g.set = SampleRsep(ctx, *g.profile, cfg);
    return g;
  }
  geo::CellMask base = ctx.OutsideBuffer(cfg.exclusion_buffer_km);
  if (profiled) base = base & g.profile->unsuitable;
  g.extent = OptimizeExtent(ctx, base, cfg, MakeLrQuickModel(stack, presence_x));
  g.set = profiled ? SampleRsepPlus(ctx, *g.profile, *g.extent, cfg)
                   : SampleRsPlus(ctx, *g.extent, cfg);
  return g;
}

}  // namespace locust_sdm::pa_gen
