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

// Pseudo-absence and background generation.
//
//   RS     uniform over cells outside the exclusion buffer
//   RSEP   RS restricted to cells a presence-trained one-class SVM rejects
//   RS+    RS restricted to an optimized neighbourhood of the presences
//   RSEP+  both restrictions
//   BS     uniform over all cells, no constraint
//
// Candidates are cell centers, sampled without replacement, and every point
// is dated uniformly within the presence-date range of its split.

#ifndef LOCUST_SDM_PA_GEN_H_
#define LOCUST_SDM_PA_GEN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locust_sdm/dataset.h"
#include "locust_sdm/geo.h"
#include "locust_sdm/matrix.h"
#include "locust_sdm/models.h"

namespace locust_sdm::pa_gen {

using dataset::Method;

struct OcsvmSettings {
  double nu = 0.5;
  double gamma = 0.0;  // <= 0 selects the data-scaled default
  // Profiling features are the schema columns starting with any prefix.
  std::vector<std::string> feature_prefixes{"SoilMoi"};
};

struct PaConfig {
  double exclusion_buffer_km = 30.0;
  // nullopt matches the presence count of the split.
  std::optional<std::size_t> target_count;
  std::uint64_t seed = 0;
  OcsvmSettings ocsvm;
  std::vector<double> extent_radii_km{50, 100, 200, 400, 800, 1600, 3200};
  double extent_threshold = 0.95;

  // Throws Error(kConfig) when an invariant is violated.
  void Validate() const;
  // Stable one-line description recorded as provenance.
  std::string Snapshot() const;
};

struct PaPoint {
  geo::GeoPoint location;
  Date date;
  geo::CellId cell = 0;
  Method method = Method::kRs;
  std::uint64_t seed = 0;
};

struct PseudoAbsenceSet {
  std::vector<PaPoint> points;
  Method method = Method::kRs;  // kMixed for test mixtures
  std::uint64_t seed = 0;
  std::string config_snapshot;
  std::optional<double> extent_radius_km;
};

// Presences of one split together with the per-cell distance to the
// nearest of them, which every sampler shares.
class SplitContext {
 public:
  // Throws Error(kConfig) when `presences` is empty and Error(kOutOfBounds)
  // when a presence falls outside the grid.
  SplitContext(const geo::Grid& grid,
               std::span<const dataset::Observation> presences);

  const geo::Grid& grid() const { return grid_; }
  const std::vector<dataset::Observation>& presences() const {
    return presences_;
  }
  std::vector<geo::GeoPoint> presence_points() const;
  Date first_date() const { return first_date_; }
  Date last_date() const { return last_date_; }
  const std::vector<double>& nearest_km() const { return nearest_km_; }
  // Median presence date (lower median), the profiling reference date.
  Date median_date() const { return median_date_; }

  // Cells farther than `buffer_km` from every presence.
  geo::CellMask OutsideBuffer(double buffer_km) const;
  // Cells within `radius_km` of some presence.
  geo::CellMask Extent(double radius_km) const;

 private:
  geo::Grid grid_;
  std::vector<dataset::Observation> presences_;
  Date first_date_{};
  Date last_date_{};
  Date median_date_{};
  std::vector<double> nearest_km_;
};

// Uniform sample of `count` cells of `candidates` without replacement,
// each dated uniformly in [first, last]. Throws
// Error(kInsufficientCandidates) with the shortfall.
PseudoAbsenceSet SampleFromMask(const geo::Grid& grid,
                                const geo::CellMask& candidates,
                                std::size_t count, Date first, Date last,
                                Method method, std::uint64_t seed);

PseudoAbsenceSet SampleRs(const SplitContext& ctx, const PaConfig& cfg);

// ---------------------------------------------------------------------------
// Environmental profiling.

struct Profile {
  models::OcsvmModel model;
  std::vector<std::size_t> columns;  // schema columns fed to the SVM
  std::vector<double> decision;      // per grid cell
  geo::CellMask unsuitable;          // decision < 0
};

// Schema columns selected by the prefixes; throws Error(kConfig) if none.
std::vector<std::size_t> ProfileColumns(const dataset::FeatureSchema& schema,
                                        const OcsvmSettings& settings);

// Fits the one-class SVM on the presence rows (full schema width) and scores
// every grid row. `grid_features` has one row per cell.
Profile ProfileUnsuitable(const geo::Grid& grid, const Matrix& presence_features,
                          const Matrix& grid_features,
                          const dataset::FeatureSchema& schema,
                          const OcsvmSettings& settings);

// Features of every cell at `date`.
Matrix GridFeatures(const dataset::RasterStack& stack, Date date);

PseudoAbsenceSet SampleRsep(const SplitContext& ctx, const Profile& profile,
                            const PaConfig& cfg);

// ---------------------------------------------------------------------------
// Background extent optimization.

// Validation AUC of a quick presence-vs-pseudo-absence model.
using QuickModel =
    std::function<double(const PseudoAbsenceSet& pseudo_absences,
                         std::uint64_t seed)>;

struct ExtentRow {
  double radius_km = 0.0;
  std::size_t candidates = 0;
  std::optional<double> auc;  // nullopt when skipped
  std::string skip_reason;
};

struct SaturationFit {
  double vm = 0.0;
  double k = 0.0;
  double Predict(double r) const { return vm * r / (k + r); }
};

struct ExtentResult {
  double radius_km = 0.0;
  geo::CellMask mask;  // Extent(radius_km)
  std::vector<ExtentRow> table;
  SaturationFit fit;
};

// Least-squares fit of auc ~ vm * r / (k + r). Needs >= 1 point.
SaturationFit FitSaturation(std::span<const double> radii,
                            std::span<const double> auc);

// Smallest radius whose fitted AUC reaches threshold * vm; the largest
// evaluated radius when none does. Throws Error(kNoViableExtent) when no row
// has an AUC.
double SelectExtentRadius(std::span<const ExtentRow> table, double threshold,
                          SaturationFit* fit = nullptr);

// For each ladder radius, samples pseudo-absences from base & Extent(r),
// scores them with `quick_model` and selects the radius as above.
// `base` is the method's unrestricted candidate mask.
ExtentResult OptimizeExtent(const SplitContext& ctx, const geo::CellMask& base,
                            const PaConfig& cfg, const QuickModel& quick_model);

// LR on presences vs pseudo-absences, 80:20 split, validation AUC. Splits
// whose validation part lacks a class are reported as kSingleClass.
QuickModel MakeLrQuickModel(const dataset::RasterStack& stack,
                            const Matrix& presence_features);

PseudoAbsenceSet SampleRsPlus(const SplitContext& ctx,
                              const ExtentResult& extent, const PaConfig& cfg);
PseudoAbsenceSet SampleRsepPlus(const SplitContext& ctx, const Profile& profile,
                                const ExtentResult& extent,
                                const PaConfig& cfg);

// ---------------------------------------------------------------------------

// `n` distinct cells uniformly over the grid, dated uniformly in
// [first, last]. Throws Error(kInsufficientCandidates) when n exceeds the
// cell count.
PseudoAbsenceSet SampleBackground(const geo::Grid& grid, std::size_t n,
                                  Date first, Date last, std::uint64_t seed);

// n_total / 4 points from each method's set, the remainder going to the
// methods first in lexicographic order, shuffled. Points keep their method
// and seed.
PseudoAbsenceSet BuildTestMixture(
    const std::map<Method, PseudoAbsenceSet>& per_method, std::size_t n_total,
    std::uint64_t seed);

// Features of every point, in order.
Matrix PointFeatures(const dataset::RasterStack& stack,
                     std::span<const PaPoint> points);

// Features of every observation, in order.
Matrix ObservationFeatures(const dataset::RasterStack& stack,
                           std::span<const dataset::Observation> observations);

struct Generated {
  PseudoAbsenceSet set;
  std::optional<Profile> profile;     // RSEP and RSEP+
  std::optional<ExtentResult> extent;  // RS+ and RSEP+
};

// One pseudo-absence method end to end on one split: profiling at the
// median presence date, extent optimization with the LR quick model, then
// sampling, all seeded by cfg.seed. Throws Error(kConfig) for kBs/kMixed.
Generated GenerateForMethod(const dataset::RasterStack& stack,
                            std::span<const dataset::Observation> presences,
                            Method method, const PaConfig& cfg);

// Header lat,lon,date,method,seed.
void ExportPseudoAbsences(const std::filesystem::path& path,
                          const PseudoAbsenceSet& set,
                          const std::string& provenance = {});
PseudoAbsenceSet ReadPseudoAbsences(const std::filesystem::path& path,
                                    const geo::Grid& grid);

}  // namespace locust_sdm::pa_gen

#endif  // LOCUST_SDM_PA_GEN_H_
