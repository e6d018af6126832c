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

// Observations, environmental rasters and the windowed feature pipeline.
//
// A feature vector holds, for every temporal variable, the means of 14
// consecutive six-day windows taken oldest-first from the 95-day history
// ending at the observation date, after the newest 7 days (the forecast
// lead) are dropped; the 4 residual days that do not fill a window are
// dropped as well. Static per-cell values follow.

#ifndef LOCUST_SDM_DATASET_H_
#define LOCUST_SDM_DATASET_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "locust_sdm/errors.h"
#include "locust_sdm/geo.h"
#include "locust_sdm/io.h"
#include "locust_sdm/matrix.h"
#include "locust_sdm/random.h"

namespace locust_sdm::dataset {

inline constexpr int kHistoryDays = 95;
inline constexpr int kLeadDays = 7;
inline constexpr int kBucketDays = 6;
inline constexpr int kBucketsPerVariable = 14;
// Oldest day used, as an offset before the observation date.
inline constexpr int kOldestOffset = kHistoryDays - 1;
// Newest day used: the last day of bucket 14.
inline constexpr int kNewestUsedOffset =
    kOldestOffset - kBucketsPerVariable * kBucketDays + 1;

const std::vector<std::string>& DefaultTemporalVariables();
const std::vector<std::string>& DefaultStaticVariables();

// Generation method of a pseudo-absence or background point.
enum class Method { kRs, kRsep, kRsPlus, kRsepPlus, kBs, kMixed };

std::string_view MethodName(Method method);
// Accepts the display names ("RS+") and lower-case forms ("rs+", "rsep_plus").
std::optional<Method> ParseMethod(std::string_view text);
// The four pseudo-absence methods in lexicographic name order.
const std::vector<Method>& PseudoAbsenceMethods();

struct Observation {
  long long id = 0;
  geo::GeoPoint location;
  Date date;
  bool presence = true;
};

// Throws Error(kParse) with the line number for malformed rows and
// Error(kOutOfBounds) for coordinates outside [-90,90] x [-180,180).
std::vector<Observation> IngestObservations(const std::filesystem::path& path);
void WriteObservations(const std::filesystem::path& path,
                       std::span<const Observation> observations,
                       const std::string& provenance = {});

// Daily values of one variable over a contiguous date range. Missing values
// are NaN.
class TemporalRaster {
 public:
  TemporalRaster() = default;
  TemporalRaster(std::string variable, const geo::Grid& grid, Date first_date,
                 std::size_t num_days);

  const std::string& variable() const { return variable_; }
  const geo::Grid& grid() const { return grid_; }
  Date first_date() const { return first_date_; }
  Date last_date() const {
    return first_date_ + std::chrono::days(static_cast<int>(num_days_) - 1);
  }
  std::size_t num_days() const { return num_days_; }

  bool Covers(Date date) const {
    return date >= first_date_ && date <= last_date();
  }
  std::size_t DayIndex(Date date) const {
    return static_cast<std::size_t>((date - first_date_).count());
  }

  double at(std::size_t day, geo::CellId cell) const {
    return values_[day * grid_.size() + cell];
  }
  double& at(std::size_t day, geo::CellId cell) {
    return values_[day * grid_.size() + cell];
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::string variable_;
  geo::Grid grid_;
  Date first_date_{};
  std::size_t num_days_ = 0;
  std::vector<double> values_;
};

class StaticRaster {
 public:
  StaticRaster() = default;
  StaticRaster(std::string variable, const geo::Grid& grid);

  const std::string& variable() const { return variable_; }
  const geo::Grid& grid() const { return grid_; }
  double at(geo::CellId cell) const { return values_[cell]; }
  double& at(geo::CellId cell) { return values_[cell]; }

 private:
  std::string variable_;
  geo::Grid grid_;
  std::vector<double> values_;
};

struct RasterStack {
  geo::Grid grid;
  std::vector<TemporalRaster> temporal;
  std::vector<StaticRaster> statics;
};

// Ordered feature names shared by every vector of a dataset.
class FeatureSchema {
 public:
  FeatureSchema(std::vector<std::string> temporal_variables,
                std::vector<std::string> static_variables);
  static FeatureSchema ForStack(const RasterStack& stack);
  static FeatureSchema Default() {
    return FeatureSchema(DefaultTemporalVariables(), DefaultStaticVariables());
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t num_temporal() const { return temporal_.size(); }
  std::size_t num_static() const { return static_.size(); }

  // Column of <variable>_bucket_<bucket>, bucket in [1, 14].
  std::size_t TemporalIndex(std::size_t variable, int bucket) const {
    return variable * kBucketsPerVariable + static_cast<std::size_t>(bucket - 1);
  }
  std::size_t StaticIndex(std::size_t variable) const {
    return temporal_.size() * kBucketsPerVariable + variable;
  }
  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Columns whose name starts with `prefix`.
  std::vector<std::size_t> IndicesWithPrefix(std::string_view prefix) const;

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> temporal_;
  std::vector<std::string> static_;
  std::vector<std::string> names_;
};

struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureSchema> schema;
};

// Writes the features of `cell` at `date` into `out` (length = schema size).
// Throws Error(kCoverage) if any needed (date, cell) value is absent.
void AssembleFeaturesInto(const RasterStack& stack, geo::CellId cell,
                          Date date, std::span<double> out);

// Locates `location` on the stack's grid and assembles its feature vector.
FeatureVector AssembleFeatures(const RasterStack& stack,
                               const geo::GeoPoint& location, Date date);
FeatureVector AssembleFeatures(const RasterStack& stack,
                               const Observation& obs);

// Rasters in long format. Rows are located on `grid`; the date range of a
// temporal variable spans its earliest to latest row.
std::vector<TemporalRaster> ReadTemporalRasters(
    const std::filesystem::path& path, const geo::Grid& grid);
std::vector<StaticRaster> ReadStaticRasters(const std::filesystem::path& path,
                                            const geo::Grid& grid);
void WriteTemporalRasters(const std::filesystem::path& path,
                          std::span<const TemporalRaster> rasters,
                          const std::string& provenance = {});
void WriteStaticRasters(const std::filesystem::path& path,
                        std::span<const StaticRaster> rasters,
                        const std::string& provenance = {});

enum class Origin {
  kObserved,
  kPseudoRs,
  kPseudoRsep,
  kPseudoRsPlus,
  kPseudoRsepPlus,
  kBackground,
};

std::string_view OriginName(Origin origin);
Origin OriginFor(Method method);

enum class Split { kTrain, kVal, kTest };
std::string_view SplitName(Split split);

struct LabeledRow {
  std::vector<double> features;
  bool label = false;  // true = presence.
  Origin origin = Origin::kObserved;
  Date date;
  geo::GeoPoint location;
};

struct LabeledDataset {
  std::shared_ptr<const FeatureSchema> schema;
  Split split = Split::kTrain;
  std::vector<LabeledRow> rows;

  Matrix Features() const;
  std::vector<int> Labels() const;
};

// Header is the schema followed by label,origin,date,lat,lon,split.
void ExportDatasets(const std::filesystem::path& path,
                    std::span<const LabeledDataset> datasets,
                    const std::string& provenance = {});

template <typename Row>
Date RowDate(const Row& row) {
  return row.date;
}

// Rows dated in or before `train_end_year` go to train, the rest to test.
template <typename Row>
std::pair<std::vector<Row>, std::vector<Row>> TemporalSplit(
    std::span<const Row> rows, int train_end_year = 2014) {
  std::pair<std::vector<Row>, std::vector<Row>> out;
  for (const Row& row : rows) {
    if (YearOf(RowDate(row)) <= train_end_year) {
      out.first.push_back(row);
    } else {
      out.second.push_back(row);
    }
  }
  return out;
}

// Uniform random partition with ceil(ratio * n) rows in the first part.
// Relative row order is preserved inside each part.
template <typename Row>
std::pair<std::vector<Row>, std::vector<Row>> TrainValSplit(
    std::span<const Row> rows, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kConfig, "train/val ratio must lie in (0, 1)");
  }
  const std::size_t n = rows.size();
  // The epsilon keeps 0.8 * 10 from rounding up to 9.
  const auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  Shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;
  std::pair<std::vector<Row>, std::vector<Row>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.first : out.second).push_back(rows[i]);
  }
  return out;
}

}  // namespace locust_sdm::dataset

#endif  // LOCUST_SDM_DATASET_H_
