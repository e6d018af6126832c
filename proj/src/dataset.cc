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

#include "locust_sdm/dataset.h"

#include <cctype>
#include <limits>
#include <map>
#include <ostream>

#include "locust_sdm/errors.h"

namespace locust_sdm::dataset {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string AtLine(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

void WriteProvenance(std::ostream& out, const std::string& provenance) {
  if (!provenance.empty()) out << "# " << provenance << '\n';
}

geo::GeoPoint ParsePoint(const std::filesystem::path& path, std::size_t line,
                         std::string_view lat_text, std::string_view lon_text) {
  const auto lat = ParseDouble(lat_text);
  const auto lon = ParseDouble(lon_text);
  if (!lat || !lon) {
    throw Error(ErrorCode::kParse, AtLine(path, line) + "bad coordinate");
  }
  if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon >= 180.0 ||
      !std::isfinite(*lat) || !std::isfinite(*lon)) {
    throw Error(ErrorCode::kOutOfBounds,
                AtLine(path, line) + "coordinate (" + std::string(lat_text) +
                    ", " + std::string(lon_text) + ") out of range");
  }
  return geo::GeoPoint{*lat, *lon};
}

Date ParseDateField(const std::filesystem::path& path, std::size_t line,
                    std::string_view text) {
  const auto date = ParseDate(text);
  if (!date) {
    throw Error(ErrorCode::kParse,
                AtLine(path, line) + "bad date '" + std::string(text) + "'");
  }
  return *date;
}

geo::CellId LocateOrThrow(const geo::Grid& grid, const geo::GeoPoint& p,
                          const std::filesystem::path& path, std::size_t line) {
  const auto cell = grid.Locate(p);
  if (!cell) {
    throw Error(ErrorCode::kOutOfBounds,
                AtLine(path, line) + "point outside the study grid");
  }
  return *cell;
}

}  // namespace

const std::vector<std::string>& DefaultTemporalVariables() {
  static const std::vector<std::string> kNames = {
      "AvgSurfT_inst",       "Albedo_inst",         "SoilMoi0_10cm_inst",
      "SoilMoi10_40cm_inst", "SoilTMP0_10cm_inst",  "SoilTMP10_40cm_inst",
      "Tveg_tavg",           "Wind_f_inst",         "Rainf_f_tavg",
      "Tair_f_inst",         "Qair_f_inst",         "Psurf_f_inst"};
  return kNames;
}

const std::vector<std::string>& DefaultStaticVariables() {
  static const std::vector<std::string> kNames = {
      "sand_0.5cm_mean", "sand_5.15cm_mean", "clay_0.5cm_mean",
      "clay_5.15cm_mean", "silt_0.5cm_mean", "silt_5.15cm_mean"};
  return kNames;
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kRs: return "RS";
    case Method::kRsep: return "RSEP";
    case Method::kRsPlus: return "RS+";
    case Method::kRsepPlus: return "RSEP+";
    case Method::kBs: return "BS";
    case Method::kMixed: return "MIXED";
  }
  return "?";
}

std::optional<Method> ParseMethod(std::string_view text) {
  std::string s;
  for (char c : text) s += static_cast<char>(std::tolower(c));
  if (s == "rs") return Method::kRs;
  if (s == "rsep") return Method::kRsep;
  if (s == "rs+" || s == "rs_plus" || s == "rsplus") return Method::kRsPlus;
  if (s == "rsep+" || s == "rsep_plus" || s == "rsepplus") {
    return Method::kRsepPlus;
  }
  if (s == "bs") return Method::kBs;
  if (s == "mixed") return Method::kMixed;
  return std::nullopt;
}

const std::vector<Method>& PseudoAbsenceMethods() {
  static const std::vector<Method> kMethods = {
      Method::kRs, Method::kRsPlus, Method::kRsep, Method::kRsepPlus};
  return kMethods;
}

std::vector<Observation> IngestObservations(
    const std::filesystem::path& path) {
  std::vector<Observation> out;
  ReadCsv(path, {"id", "lat", "lon", "date", "presence"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 5) {
              throw Error(ErrorCode::kParse,
                          AtLine(path, line) + "expected 5 fields");
            }
            Observation obs;
            const auto id = ParseInt(f[0]);
            if (!id) {
              throw Error(ErrorCode::kParse, AtLine(path, line) + "bad id");
            }
            obs.id = *id;
            obs.location = ParsePoint(path, line, f[1], f[2]);
            obs.date = ParseDateField(path, line, f[3]);
            if (f[4] == "1") {
              obs.presence = true;
            } else if (f[4] == "0") {
              obs.presence = false;
            } else {
              throw Error(ErrorCode::kParse,
                          AtLine(path, line) + "presence must be 0 or 1");
            }
            out.push_back(obs);
          });
  return out;
}

void WriteObservations(const std::filesystem::path& path,
                       std::span<const Observation> observations,
                       const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    WriteProvenance(out, provenance);
    out << "id,lat,lon,date,presence\n";
    for (const auto& obs : observations) {
      out << obs.id << ',' << FormatDouble(obs.location.lat) << ','
          << FormatDouble(obs.location.lon) << ',' << FormatDate(obs.date)
          << ',' << (obs.presence ? 1 : 0) << '\n';
    }
  });
}

TemporalRaster::TemporalRaster(std::string variable, const geo::Grid& grid,
                               Date first_date, std::size_t num_days)
    : variable_(std::move(variable)),
      grid_(grid),
      first_date_(first_date),
      num_days_(num_days),
      values_(num_days * grid.size(), kNaN) {}

StaticRaster::StaticRaster(std::string variable, const geo::Grid& grid)
    : variable_(std::move(variable)), grid_(grid), values_(grid.size(), kNaN) {}

FeatureSchema::FeatureSchema(std::vector<std::string> temporal_variables,
                             std::vector<std::string> static_variables)
    : temporal_(std::move(temporal_variables)),
      static_(std::move(static_variables)) {
  names_.reserve(temporal_.size() * kBucketsPerVariable + static_.size());
  for (const auto& v : temporal_) {
    for (int b = 1; b <= kBucketsPerVariable; ++b) {
      names_.push_back(v + "_bucket_" + std::to_string(b));
    }
  }
  for (const auto& v : static_) names_.push_back(v);
}

FeatureSchema FeatureSchema::ForStack(const RasterStack& stack) {
  std::vector<std::string> temporal;
  std::vector<std::string> statics;
  for (const auto& r : stack.temporal) temporal.push_back(r.variable());
  for (const auto& r : stack.statics) statics.push_back(r.variable());
  return FeatureSchema(std::move(temporal), std::move(statics));
}

std::optional<std::size_t> FeatureSchema::IndexOf(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> FeatureSchema::IndicesWithPrefix(
    std::string_view prefix) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (std::string_view(names_[i]).starts_with(prefix)) out.push_back(i);
  }
  return out;
}

void AssembleFeaturesInto(const RasterStack& stack, geo::CellId cell,
                          Date date, std::span<double> out) {
  const std::size_t expected =
      stack.temporal.size() * kBucketsPerVariable + stack.statics.size();
  if (out.size() != expected) {
    throw Error(ErrorCode::kSchemaMismatch,
                "feature buffer has " + std::to_string(out.size()) +
                    " slots, stack needs " + std::to_string(expected));
  }
  if (cell >= stack.grid.size()) {
    throw Error(ErrorCode::kOutOfBounds, "cell id outside the grid");
  }
  const Date oldest = date - std::chrono::days(kOldestOffset);
  const Date newest = date - std::chrono::days(kNewestUsedOffset);
  std::size_t k = 0;
  for (const auto& raster : stack.temporal) {
    if (!raster.Covers(oldest) || !raster.Covers(newest)) {
      throw Error(ErrorCode::kCoverage,
                  raster.variable() + " does not cover " + FormatDate(oldest) +
                      " .. " + FormatDate(newest));
    }
    std::size_t day = raster.DayIndex(oldest);
    for (int b = 0; b < kBucketsPerVariable; ++b) {
      double sum = 0.0;
      for (int d = 0; d < kBucketDays; ++d, ++day) {
        const double v = raster.at(day, cell);
        if (std::isnan(v)) {
          throw Error(ErrorCode::kCoverage,
                      raster.variable() + " missing on " +
                          FormatDate(raster.first_date() +
                                     std::chrono::days(static_cast<int>(day))) +
                          " at cell " + std::to_string(cell));
        }
        sum += v;
      }
      out[k++] = sum / kBucketDays;
    }
  }
  for (const auto& raster : stack.statics) {
    const double v = raster.at(cell);
    if (std::isnan(v)) {
      throw Error(ErrorCode::kCoverage, raster.variable() +
                                            " missing at cell " +
                                            std::to_string(cell));
    }
    out[k++] = v;
  }
}

FeatureVector AssembleFeatures(const RasterStack& stack,
                               const geo::GeoPoint& location, Date date) {
  const auto cell = stack.grid.Locate(location);
  if (!cell) {
    throw Error(ErrorCode::kOutOfBounds, "location outside the raster grid");
  }
  FeatureVector fv;
  fv.schema = std::make_shared<const FeatureSchema>(FeatureSchema::ForStack(stack));
  fv.values.resize(fv.schema->size());
  AssembleFeaturesInto(stack, *cell, date, fv.values);
  return fv;
}

FeatureVector AssembleFeatures(const RasterStack& stack,
                               const Observation& obs) {
  return AssembleFeatures(stack, obs.location, obs.date);
}

std::vector<TemporalRaster> ReadTemporalRasters(
    const std::filesystem::path& path, const geo::Grid& grid) {
  struct Entry {
    geo::CellId cell;
    Date date;
    double value;
  };
  std::map<std::string, std::vector<Entry>> by_variable;
  std::vector<std::string> order;
  ReadCsv(path, {"variable", "lat", "lon", "date", "value"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 5) {
              throw Error(ErrorCode::kParse,
                          AtLine(path, line) + "expected 5 fields");
            }
            const auto p = ParsePoint(path, line, f[1], f[2]);
            const auto value = ParseDouble(f[4]);
            if (!value) {
              throw Error(ErrorCode::kParse, AtLine(path, line) + "bad value");
            }
            std::string name(f[0]);
            auto [it, inserted] = by_variable.try_emplace(name);
            if (inserted) order.push_back(name);
            it->second.push_back({LocateOrThrow(grid, p, path, line),
                                  ParseDateField(path, line, f[3]), *value});
          });
  std::vector<TemporalRaster> out;
  for (const auto& name : order) {
    const auto& entries = by_variable[name];
    Date first = entries.front().date;
    Date last = first;
    for (const auto& e : entries) {
      first = std::min(first, e.date);
      last = std::max(last, e.date);
    }
    TemporalRaster raster(name, grid, first,
                          static_cast<std::size_t>((last - first).count()) + 1);
    for (const auto& e : entries) raster.at(raster.DayIndex(e.date), e.cell) = e.value;
    out.push_back(std::move(raster));
  }
  return out;
}

std::vector<StaticRaster> ReadStaticRasters(const std::filesystem::path& path,
                                            const geo::Grid& grid) {
  std::vector<StaticRaster> out;
  std::map<std::string, std::size_t> index;
  ReadCsv(path, {"variable", "lat", "lon", "value"},
          [&](std::size_t line, const std::vector<std::string_view>& f) {
            if (f.size() != 4) {
              throw Error(ErrorCode::kParse,
                          AtLine(path, line) + "expected 4 fields");
            }
            const auto p = ParsePoint(path, line, f[1], f[2]);
            const auto value = ParseDouble(f[3]);
            if (!value) {
              throw Error(ErrorCode::kParse, AtLine(path, line) + "bad value");
            }
            std::string name(f[0]);
            auto [it, inserted] = index.try_emplace(name, out.size());
            if (inserted) out.emplace_back(name, grid);
            out[it->second].at(LocateOrThrow(grid, p, path, line)) = *value;
          });
  return out;
}

void WriteTemporalRasters(const std::filesystem::path& path,
                          std::span<const TemporalRaster> rasters,
                          const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    WriteProvenance(out, provenance);
    out << "variable,lat,lon,date,value\n";
    for (const auto& r : rasters) {
      const auto centers = r.grid().Centers();
      for (std::size_t day = 0; day < r.num_days(); ++day) {
        const std::string date = FormatDate(
            r.first_date() + std::chrono::days(static_cast<int>(day)));
        for (geo::CellId c = 0; c < centers.size(); ++c) {
          const double v = r.at(day, c);
          if (std::isnan(v)) continue;
          out << r.variable() << ',' << FormatDouble(centers[c].lat) << ','
              << FormatDouble(centers[c].lon) << ',' << date << ','
              << FormatDouble(v) << '\n';
        }
      }
    }
  });
}

void WriteStaticRasters(const std::filesystem::path& path,
                        std::span<const StaticRaster> rasters,
                        const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    WriteProvenance(out, provenance);
    out << "variable,lat,lon,value\n";
    for (const auto& r : rasters) {
      const auto centers = r.grid().Centers();
      for (geo::CellId c = 0; c < centers.size(); ++c) {
        if (std::isnan(r.at(c))) continue;
        out << r.variable() << ',' << FormatDouble(centers[c].lat) << ','
            << FormatDouble(centers[c].lon) << ',' << FormatDouble(r.at(c))
            << '\n';
      }
    }
  });
}

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kObserved: return "observed";
    case Origin::kPseudoRs: return "pseudo:RS";
    case Origin::kPseudoRsep: return "pseudo:RSEP";
    case Origin::kPseudoRsPlus: return "pseudo:RS+";
    case Origin::kPseudoRsepPlus: return "pseudo:RSEP+";
    case Origin::kBackground: return "background";
  }
  return "?";
}

Origin OriginFor(Method method) {
  switch (method) {
    case Method::kRs: return Origin::kPseudoRs;
    case Method::kRsep: return Origin::kPseudoRsep;
    case Method::kRsPlus: return Origin::kPseudoRsPlus;
    case Method::kRsepPlus: return Origin::kPseudoRsepPlus;
    case Method::kBs: return Origin::kBackground;
    case Method::kMixed: break;
  }
  throw Error(ErrorCode::kConfig, "mixed sets carry per-point origins");
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Matrix LabeledDataset::Features() const {
  Matrix x(rows.size(), schema ? schema->size() : 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].features.size() != x.cols()) {
      throw Error(ErrorCode::kSchemaMismatch, "row width differs from schema");
    }
    std::copy(rows[i].features.begin(), rows[i].features.end(),
              x.row(i).begin());
  }
  return x;
}

std::vector<int> LabeledDataset::Labels() const {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.label ? 1 : 0);
  return y;
}

void ExportDatasets(const std::filesystem::path& path,
                    std::span<const LabeledDataset> datasets,
                    const std::string& provenance) {
  if (datasets.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation, "no datasets to export");
  }
  const auto& schema = datasets.front().schema;
  for (const auto& ds : datasets) {
    if (!ds.schema || !schema || !(*ds.schema == *schema)) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "datasets in one export must share a schema");
    }
  }
  WriteFileAtomic(path, [&](std::ostream& out) {
    WriteProvenance(out, provenance);
    for (const auto& name : schema->names()) out << name << ',';
    out << "label,origin,date,lat,lon,split\n";
    for (const auto& ds : datasets) {
      for (const auto& row : ds.rows) {
        for (double v : row.features) out << FormatDouble(v) << ',';
        out << (row.label ? 1 : 0) << ',' << OriginName(row.origin) << ','
            << FormatDate(row.date) << ',' << FormatDouble(row.location.lat)
            << ',' << FormatDouble(row.location.lon) << ','
            << SplitName(ds.split) << '\n';
      }
    }
  });
}

}  // namespace locust_sdm::dataset
