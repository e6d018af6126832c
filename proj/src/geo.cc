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

#include "locust_sdm/geo.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/random.h"

namespace locust_sdm::geo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double NormalizeLon(double lon) {
  double out = std::fmod(lon + 180.0, 360.0);
  if (out < 0.0) out += 360.0;
  out -= 180.0;
  // fmod can land exactly on +180 after the shift for inputs like -180-eps.
  if (out >= 180.0) out -= 360.0;
  return out;
}

}  // namespace

GeoPoint GeoPoint::Make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 ||
      lat > 90.0) {
    throw Error(ErrorCode::kOutOfBounds,
                "coordinate (" + FormatDouble(lat) + ", " + FormatDouble(lon) +
                    ") outside [-90,90] x [-180,180)");
  }
  return GeoPoint{lat, NormalizeLon(lon)};
}

double HaversineKm(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

Grid Grid::Build(const BBox& bbox, double resolution) {
  if (!(resolution > 0.0) || !(bbox.lat_min < bbox.lat_max) ||
      !(bbox.lon_min < bbox.lon_max)) {
    throw Error(ErrorCode::kConfig,
                "grid needs lat_min < lat_max, lon_min < lon_max and a "
                "positive resolution");
  }
  if (bbox.lat_min < -90.0 || bbox.lat_max > 90.0 || bbox.lon_min < -180.0 ||
      bbox.lon_max > 180.0) {
    throw Error(ErrorCode::kOutOfBounds, "bounding box outside the globe");
  }
  Grid grid;
  grid.bbox_ = bbox;
  grid.resolution_ = resolution;
  grid.rows_ = static_cast<std::size_t>(
      std::llround((bbox.lat_max - bbox.lat_min) / resolution));
  grid.cols_ = static_cast<std::size_t>(
      std::llround((bbox.lon_max - bbox.lon_min) / resolution));
  if (grid.rows_ == 0 || grid.cols_ == 0) {
    throw Error(ErrorCode::kEmptyGrid,
                "bounding box is smaller than one " + FormatDouble(resolution) +
                    " degree cell");
  }
  return grid;
}

GeoPoint Grid::Center(CellId id) const {
  const std::size_t row = id / cols_;
  const std::size_t col = id % cols_;
  return GeoPoint{bbox_.lat_min + (static_cast<double>(row) + 0.5) * resolution_,
                  bbox_.lon_min +
                      (static_cast<double>(col) + 0.5) * resolution_};
}

std::vector<GeoPoint> Grid::Centers() const {
  std::vector<GeoPoint> out;
  out.reserve(size());
  for (CellId id = 0; id < size(); ++id) out.push_back(Center(id));
  return out;
}

std::optional<CellId> Grid::Locate(const GeoPoint& p) const {
  const double fr = (p.lat - bbox_.lat_min) / resolution_;
  const double fc = (p.lon - bbox_.lon_min) / resolution_;
  if (fr < 0.0 || fc < 0.0) return std::nullopt;
  const auto row = static_cast<std::size_t>(std::floor(fr));
  const auto col = static_cast<std::size_t>(std::floor(fc));
  if (row >= rows_ || col >= cols_) return std::nullopt;
  return static_cast<CellId>(row * cols_ + col);
}

std::uint64_t Grid::Fingerprint() const {
  std::uint64_t h = 0x6772696400000000ULL;
  for (double v : {bbox_.lat_min, bbox_.lat_max, bbox_.lon_min, bbox_.lon_max,
                   resolution_}) {
    h = Mix64(h ^ std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

CellMask::CellMask(const Grid& grid, bool value)
    : grid_id_(grid.Fingerprint()), included_(grid.size(), value ? 1 : 0) {}

std::size_t CellMask::Count() const {
  return static_cast<std::size_t>(
      std::count(included_.begin(), included_.end(), std::uint8_t{1}));
}

std::vector<CellId> CellMask::Cells() const {
  std::vector<CellId> out;
  for (std::size_t i = 0; i < included_.size(); ++i) {
    if (included_[i]) out.push_back(static_cast<CellId>(i));
  }
  return out;
}

void CellMask::CheckCompatible(const CellMask& other) const {
  if (grid_id_ != other.grid_id_ || included_.size() != other.included_.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "cell masks belong to different grids");
  }
}

CellMask CellMask::operator&(const CellMask& other) const {
  CheckCompatible(other);
  CellMask out = *this;
  for (std::size_t i = 0; i < included_.size(); ++i) {
    out.included_[i] = included_[i] & other.included_[i];
  }
  return out;
}

CellMask CellMask::operator|(const CellMask& other) const {
  CheckCompatible(other);
  CellMask out = *this;
  for (std::size_t i = 0; i < included_.size(); ++i) {
    out.included_[i] = included_[i] | other.included_[i];
  }
  return out;
}

CellMask CellMask::operator~() const {
  CellMask out = *this;
  for (auto& v : out.included_) v = v ? 0 : 1;
  return out;
}

bool CellMask::IsSubsetOf(const CellMask& other) const {
  CheckCompatible(other);
  for (std::size_t i = 0; i < included_.size(); ++i) {
    if (included_[i] && !other.included_[i]) return false;
  }
  return true;
}

std::vector<double> NearestDistanceKm(const Grid& grid,
                                      std::span<const GeoPoint> points) {
  std::vector<double> out(grid.size(),
                          std::numeric_limits<double>::infinity());
  for (CellId id = 0; id < grid.size(); ++id) {
    const GeoPoint c = grid.Center(id);
    for (const auto& p : points) {
      out[id] = std::min(out[id], HaversineKm(c, p));
    }
  }
  return out;
}

CellMask BufferMask(const Grid& grid, std::span<const GeoPoint> points,
                    double radius_km) {
  if (!(radius_km >= 0.0)) {
    throw Error(ErrorCode::kConfig, "buffer radius must be non-negative");
  }
  CellMask mask(grid, false);
  const auto nearest = NearestDistanceKm(grid, points);
  for (CellId id = 0; id < grid.size(); ++id) {
    if (nearest[id] <= radius_km) mask.Set(id, true);
  }
  return mask;
}

}  // namespace locust_sdm::geo
