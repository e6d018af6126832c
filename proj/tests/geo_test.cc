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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "locust_sdm/errors.h"
#include "locust_sdm/geo.h"
#include "locust_sdm/random.h"

namespace locust_sdm::geo {
namespace {

// Independent spherical law of cosines, accurate away from tiny angles.
double CosineLawKm(const GeoPoint& a, const GeoPoint& b) {
  const double d2r = std::numbers::pi / 180.0;
  const double c = std::sin(a.lat * d2r) * std::sin(b.lat * d2r) +
                   std::cos(a.lat * d2r) * std::cos(b.lat * d2r) *
                       std::cos((b.lon - a.lon) * d2r);
  return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

GeoPoint RandomPoint(Rng& rng) {
  return GeoPoint::Make(-90.0 + 180.0 * UniformUnit(rng),
                        -180.0 + 360.0 * UniformUnit(rng));
}

TEST(Haversine, IdentityIsZero) {
  EXPECT_EQ(HaversineKm({10.0, 20.0}, {10.0, 20.0}), 0.0);
}

TEST(Haversine, OneDegreeOnEquator) {
  EXPECT_NEAR(HaversineKm({0.0, 0.0}, {0.0, 1.0}), 111.195, 0.001);
}

TEST(Haversine, Antipodal) {
  EXPECT_NEAR(HaversineKm({0.0, 0.0}, {0.0, 180.0 - 1e-12}), 20015.09, 0.01);
  EXPECT_NEAR(HaversineKm({0.0, 0.0}, GeoPoint::Make(0.0, 180.0)), 20015.09,
              0.01);
}

TEST(Haversine, MatchesCosineLaw) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint a = RandomPoint(rng);
    const GeoPoint b = RandomPoint(rng);
    EXPECT_NEAR(HaversineKm(a, b), CosineLawKm(a, b), 1e-6);
  }
}

TEST(Haversine, SymmetricAndTriangle) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint a = RandomPoint(rng);
    const GeoPoint b = RandomPoint(rng);
    const GeoPoint c = RandomPoint(rng);
    EXPECT_EQ(HaversineKm(a, b), HaversineKm(b, a));
    const double ab = HaversineKm(a, b);
    const double bc = HaversineKm(b, c);
    const double ac = HaversineKm(a, c);
    EXPECT_LE(ac, (ab + bc) * (1.0 + 1e-6) + 1e-9);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(GeoPoint, NormalizesAndValidates) {
  EXPECT_DOUBLE_EQ(GeoPoint::Make(0.0, 180.0).lon, -180.0);
  EXPECT_DOUBLE_EQ(GeoPoint::Make(0.0, 190.0).lon, -170.0);
  EXPECT_DOUBLE_EQ(GeoPoint::Make(0.0, -181.0).lon, 179.0);
  try {
    GeoPoint::Make(95.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfBounds);
  }
  EXPECT_THROW(GeoPoint::Make(std::nan(""), 0.0), Error);
}

TEST(Grid, SixteenCells) {
  const Grid g = Grid::Build({0, 1, 0, 1}, 0.25);
  EXPECT_EQ(g.size(), 16u);
  EXPECT_EQ(g.rows(), 4u);
  EXPECT_EQ(g.cols(), 4u);
}

TEST(Grid, FourCellsFirstCenter) {
  const Grid g = Grid::Build({0, 1, 0, 1}, 0.5);
  EXPECT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.Center(0).lat, 0.25);
  EXPECT_DOUBLE_EQ(g.Center(0).lon, 0.25);
}

TEST(Grid, EmptyGrid) {
  try {
    Grid::Build({0, 0.1, 0, 0.1}, 0.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGrid);
  }
  EXPECT_THROW(Grid::Build({1, 0, 0, 1}, 0.25), Error);
  EXPECT_THROW(Grid::Build({0, 1, 0, 1}, 0.0), Error);
}

TEST(Grid, LocateCentersRoundTrips) {
  const Grid g = Grid::Build({-3.0, 4.5, 30.0, 35.25}, 0.25);
  const BBox& b = g.bbox();
  for (CellId id = 0; id < g.size(); ++id) {
    const GeoPoint c = g.Center(id);
    EXPECT_GE(c.lat, b.lat_min);
    EXPECT_LE(c.lat, b.lat_max);
    EXPECT_GE(c.lon, b.lon_min);
    EXPECT_LE(c.lon, b.lon_max);
    ASSERT_TRUE(g.Locate(c).has_value());
    EXPECT_EQ(*g.Locate(c), id);
  }
  EXPECT_FALSE(g.Locate({10.0, 32.0}).has_value());
}

TEST(BufferMask, RadiusZeroOnlyCoincidentCenters) {
  const Grid g = Grid::Build({0, 2, 0, 2}, 0.25);
  const std::vector<GeoPoint> pts{g.Center(5), {0.3, 0.3}};
  const CellMask m = BufferMask(g, pts, 0.0);
  EXPECT_EQ(m.Count(), 1u);
  EXPECT_TRUE(m[5]);
}

TEST(BufferMask, AntipodalRadiusCoversAll) {
  const Grid g = Grid::Build({-10, 10, -10, 10}, 1.0);
  const std::vector<GeoPoint> pts{{0.0, 0.0}};
  EXPECT_EQ(BufferMask(g, pts, 20015.1).Count(), g.size());
}

TEST(BufferMask, ThirtyKmMatchesExhaustiveCheck) {
  const Grid g = Grid::Build({-2, 2, 10, 14}, 0.25);
  const GeoPoint p = g.Center(90);
  const std::vector<GeoPoint> pts{p};
  const CellMask m = BufferMask(g, pts, 30.0);
  std::size_t expected = 0;
  for (CellId id = 0; id < g.size(); ++id) {
    const bool inside = HaversineKm(g.Center(id), p) <= 30.0;
    EXPECT_EQ(m[id], inside) << id;
    expected += inside;
  }
  EXPECT_EQ(m.Count(), expected);
  // 0.25 deg is ~27.8 km on the equator: the center and its 4 neighbours.
  EXPECT_EQ(expected, 5u);
}

TEST(BufferMask, MonotoneInRadius) {
  const Grid g = Grid::Build({10, 15, 0, 5}, 0.25);
  Rng rng(3);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 5; ++i) {
    pts.push_back({10 + 5 * UniformUnit(rng), 5 * UniformUnit(rng)});
  }
  CellMask prev = BufferMask(g, pts, 0.0);
  for (double r : {10.0, 30.0, 60.0, 120.0, 400.0}) {
    const CellMask cur = BufferMask(g, pts, r);
    EXPECT_TRUE(prev.IsSubsetOf(cur));
    prev = cur;
  }
  EXPECT_THROW(BufferMask(g, pts, -1.0), Error);
}

TEST(CellMask, AlgebraAndGridCheck) {
  const Grid g = Grid::Build({0, 1, 0, 1}, 0.5);
  CellMask a(g, false);
  a.Set(0, true);
  a.Set(1, true);
  CellMask b(g, false);
  b.Set(1, true);
  b.Set(2, true);
  EXPECT_EQ((a & b).Count(), 1u);
  EXPECT_EQ((a | b).Count(), 3u);
  EXPECT_EQ((~a).Count(), 2u);
  EXPECT_TRUE((a & b).IsSubsetOf(a));
  const Grid other = Grid::Build({0, 1, 0, 1}, 0.25);
  EXPECT_THROW(a & CellMask(other, true), Error);
}

TEST(NearestDistance, AgreesWithBuffer) {
  const Grid g = Grid::Build({10, 12, 0, 2}, 0.25);
  const std::vector<GeoPoint> pts{{10.6, 0.9}, {11.7, 1.2}};
  const auto d = NearestDistanceKm(g, pts);
  const CellMask m = BufferMask(g, pts, 50.0);
  for (CellId id = 0; id < g.size(); ++id) EXPECT_EQ(d[id] <= 50.0, m[id]);
  EXPECT_TRUE(std::isinf(NearestDistanceKm(g, {})[0]));
}

}  // namespace
}  // namespace locust_sdm::geo
