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

// Spherical-earth geodesy and the regular lat/lon grid that every sampler
// and raster in the library is indexed by.

#ifndef LOCUST_SDM_GEO_H_
#define LOCUST_SDM_GEO_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace locust_sdm::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDefaultResolutionDeg = 0.25;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  // Validates latitude in [-90, 90] and folds longitude into [-180, 180).
  // Throws Error(kOutOfBounds) on non-finite input or bad latitude.
  static GeoPoint Make(double lat, double lon);

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Great-circle distance on a sphere of radius kEarthRadiusKm.
double HaversineKm(const GeoPoint& a, const GeoPoint& b);

struct BBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
};

using CellId = std::uint32_t;

// Equirectangular mesh of cells. Cell ids are row-major with row 0 at
// lat_min and column 0 at lon_min. Only the parameters are stored; centers
// are computed on demand, so grids are cheap to copy.
class Grid {
 public:
  // Throws Error(kEmptyGrid) when the box rounds to zero rows or columns and
  // Error(kConfig) for an inverted box or non-positive resolution.
  static Grid Build(const BBox& bbox,
                    double resolution = kDefaultResolutionDeg);

  const BBox& bbox() const { return bbox_; }
  double resolution() const { return resolution_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }

  GeoPoint Center(CellId id) const;
  std::vector<GeoPoint> Centers() const;

  // Cell containing `p`, or nullopt when it falls outside the mesh.
  std::optional<CellId> Locate(const GeoPoint& p) const;

  // Stable identity of the mesh parameters; masks carry it so they cannot be
  // combined across grids.
  std::uint64_t Fingerprint() const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.Fingerprint() == b.Fingerprint();
  }

 private:
  BBox bbox_;
  double resolution_ = kDefaultResolutionDeg;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

class CellMask {
 public:
  CellMask() = default;
  CellMask(const Grid& grid, bool value);

  std::uint64_t grid_id() const { return grid_id_; }
  std::size_t size() const { return included_.size(); }
  bool operator[](CellId id) const { return included_[id] != 0; }
  void Set(CellId id, bool value) { included_[id] = value ? 1 : 0; }

  std::size_t Count() const;
  std::vector<CellId> Cells() const;

  CellMask operator&(const CellMask& other) const;
  CellMask operator|(const CellMask& other) const;
  CellMask operator~() const;
  bool IsSubsetOf(const CellMask& other) const;

  friend bool operator==(const CellMask&, const CellMask&) = default;

 private:
  void CheckCompatible(const CellMask& other) const;

  std::uint64_t grid_id_ = 0;
  std::vector<std::uint8_t> included_;
};

// Marks every cell whose center lies within `radius_km` (inclusive) of any
// of `points`.
CellMask BufferMask(const Grid& grid, std::span<const GeoPoint> points,
                    double radius_km);

// Distance from each cell center to the nearest of `points`; +inf when
// `points` is empty.
std::vector<double> NearestDistanceKm(const Grid& grid,
                                      std::span<const GeoPoint> points);

}  // namespace locust_sdm::geo

#endif  // LOCUST_SDM_GEO_H_
