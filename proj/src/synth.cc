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

#include "locust_sdm/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "locust_sdm/errors.h"
#include "locust_sdm/random.h"

namespace locust_sdm::dataset {

namespace {

constexpr int kSpatialWaves = 6;
constexpr double kSpatialShare = 0.6;

struct FieldParams {
  double offset = 0.0;
  double scale = 1.0;
  double fx[kSpatialWaves];
  double fy[kSpatialWaves];
  double phase[kSpatialWaves];
  double gx = 0.0;
  double gy = 0.0;
  double seasonal_phase = 0.0;
};

FieldParams DrawField(Rng& rng, double offset, double scale) {
  FieldParams p;
  p.offset = offset;
  p.scale = scale;
  for (int k = 0; k < kSpatialWaves; ++k) {
    p.fx[k] = 3.0 * UniformUnit(rng) - 1.5;
    p.fy[k] = 3.0 * UniformUnit(rng) - 1.5;
    p.phase[k] = 2.0 * M_PI * UniformUnit(rng);
  }
  p.gx = 2.0 * UniformUnit(rng) - 1.0;
  p.gy = 2.0 * UniformUnit(rng) - 1.0;
  p.seasonal_phase = 2.0 * M_PI * UniformUnit(rng);
  return p;
}

// Unit-variance smooth field over normalized coordinates in [0, 1]^2.
double SpatialField(const FieldParams& p, double x, double y) {
  double s = 0.0;
  for (int k = 0; k < kSpatialWaves; ++k) {
    s += std::cos(2.0 * M_PI * (p.fx[k] * x + p.fy[k] * y) + p.phase[k]);
  }
  return s * std::sqrt(2.0 / kSpatialWaves);
}

double SeasonalField(const FieldParams& p, double x, double y, double day) {
  return std::sqrt(2.0) *
         std::cos(2.0 * M_PI * day / 365.25 +
                  2.0 * M_PI * (p.gx * x + p.gy * y) + p.seasonal_phase);
}

std::string TemporalName(int v) {
  const auto& names = DefaultTemporalVariables();
  return v < static_cast<int>(names.size()) ? names[v]
                                            : "temporal_" + std::to_string(v);
}

std::string StaticName(int v) {
  const auto& names = DefaultStaticVariables();
  return v < static_cast<int>(names.size()) ? names[v]
                                            : "static_" + std::to_string(v);
}

double Sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

}  // namespace

std::vector<double> DefaultSynthWeights(const FeatureSchema& schema,
                                        std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, HashString("weights")));
  std::vector<double> w(schema.size());
  for (auto& v : w) v = 0.05 * StandardNormal(rng);
  auto set = [&](std::string_view name, double value) {
    if (auto idx = schema.IndexOf(name)) w[*idx] = value;
  };
  set("SoilMoi0_10cm_inst_bucket_14", 3.0);
  set("Albedo_inst_bucket_14", -2.0);
  set("clay_0.5cm_mean", 2.0);
  return w;
}

SynthOracle::SynthOracle(std::shared_ptr<const RasterStack> stack,
                         std::vector<double> weights,
                         std::vector<double> offsets,
                         std::vector<double> scales, double bias, double noise,
                         std::uint64_t seed)
    : stack_(std::move(stack)),
      weights_(std::move(weights)),
      offsets_(std::move(offsets)),
      scales_(std::move(scales)),
      bias_(bias),
      noise_(noise),
      seed_(seed) {}

std::vector<double> SynthOracle::Standardize(
    std::span<const double> features) const {
  std::vector<double> z(features.size());
  for (std::size_t j = 0; j < features.size(); ++j) {
    z[j] = (features[j] - offsets_[j]) / scales_[j];
  }
  return z;
}

double SynthOracle::Noise(geo::CellId cell, Date date) const {
  if (noise_ == 0.0) return 0.0;
  // Box-Muller on two hashed uniforms; cheaper than seeding an engine per
  // query.
  const std::uint64_t key = DeriveSeed(
      DeriveSeed(seed_, cell),
      static_cast<std::uint64_t>(date.time_since_epoch().count() + (1LL << 32)));
  const double u1 = (static_cast<double>(Mix64(key) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(Mix64(key ^ 0x5bd1e995ULL) >> 11) *
                    0x1.0p-53;
  return noise_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double SynthOracle::Margin(geo::CellId cell, Date date,
                           bool with_noise) const {
  std::vector<double> f(weights_.size());
  AssembleFeaturesInto(*stack_, cell, date, f);
  double m = bias_;
  for (std::size_t j = 0; j < f.size(); ++j) {
    m += weights_[j] * (f[j] - offsets_[j]) / scales_[j];
  }
  if (with_noise) m += Noise(cell, date);
  return m;
}

double SynthOracle::Suitability(geo::CellId cell, Date date,
                                bool with_noise) const {
  return Sigmoid(Margin(cell, date, with_noise));
}

bool SynthOracle::Label(geo::CellId cell, Date date) const {
  return Margin(cell, date) >= 0.0;
}

bool SynthOracle::Label(const geo::GeoPoint& location, Date date) const {
  const auto cell = stack_->grid.Locate(location);
  if (!cell) {
    throw Error(ErrorCode::kOutOfBounds, "oracle query outside the grid");
  }
  return Label(*cell, date);
}

SynthWorld SynthGenerate(const SynthWorldConfig& config) {
  if (config.num_temporal < 0 || config.num_static < 0 ||
      config.num_temporal + config.num_static == 0) {
    throw Error(ErrorCode::kConfig, "world needs at least one variable");
  }
  if (config.presence_count < 1) {
    throw Error(ErrorCode::kConfig, "presence_count must be >= 1");
  }
  if (!(config.noise >= 0.0)) {
    throw Error(ErrorCode::kConfig, "noise must be non-negative");
  }
  const auto num_days = (config.end_date - config.start_date).count() + 1;
  if (num_days < kHistoryDays) {
    throw Error(ErrorCode::kConfig,
                "study period shorter than one " +
                    std::to_string(kHistoryDays) + "-day history");
  }
  const geo::Grid grid = geo::Grid::Build(config.bbox, config.resolution);

  std::vector<std::string> temporal_names;
  std::vector<std::string> static_names;
  for (int v = 0; v < config.num_temporal; ++v) {
    temporal_names.push_back(TemporalName(v));
  }
  for (int v = 0; v < config.num_static; ++v) {
    static_names.push_back(StaticName(v));
  }
  const FeatureSchema schema(temporal_names, static_names);
  std::vector<double> weights = config.weights.empty()
                                    ? DefaultSynthWeights(schema, config.seed)
                                    : config.weights;
  if (weights.size() != schema.size()) {
    throw Error(ErrorCode::kConfig,
                "weight vector has " + std::to_string(weights.size()) +
                    " entries, the world has " +
                    std::to_string(schema.size()) + " features");
  }

  auto stack = std::make_shared<RasterStack>();
  stack->grid = grid;
  std::vector<double> offsets(schema.size());
  std::vector<double> scales(schema.size());

  const auto& bbox = grid.bbox();
  auto norm_coords = [&](geo::CellId c) {
    const geo::GeoPoint p = grid.Center(c);
    return std::pair{(p.lat - bbox.lat_min) / (bbox.lat_max - bbox.lat_min),
                     (p.lon - bbox.lon_min) / (bbox.lon_max - bbox.lon_min)};
  };

  for (int v = 0; v < config.num_temporal; ++v) {
    Rng rng(DeriveSeed(config.seed, 1000 + v));
    const FieldParams p = DrawField(rng, 10.0 * (v + 1), 1.0 + 0.5 * v);
    TemporalRaster raster(temporal_names[v], grid, config.start_date,
                          static_cast<std::size_t>(num_days));
    for (geo::CellId c = 0; c < grid.size(); ++c) {
      const auto [x, y] = norm_coords(c);
      const double spatial = std::sqrt(kSpatialShare) * SpatialField(p, x, y);
      for (std::size_t d = 0; d < raster.num_days(); ++d) {
        const double seasonal = std::sqrt(1.0 - kSpatialShare) *
                                SeasonalField(p, x, y, static_cast<double>(d));
        raster.at(d, c) = p.offset + p.scale * (spatial + seasonal);
      }
    }
    for (int b = 1; b <= kBucketsPerVariable; ++b) {
      offsets[schema.TemporalIndex(v, b)] = p.offset;
      scales[schema.TemporalIndex(v, b)] = p.scale;
    }
    stack->temporal.push_back(std::move(raster));
  }
  for (int v = 0; v < config.num_static; ++v) {
    Rng rng(DeriveSeed(config.seed, 2000 + v));
    const FieldParams p = DrawField(rng, 100.0 + 50.0 * v, 20.0);
    StaticRaster raster(static_names[v], grid);
    for (geo::CellId c = 0; c < grid.size(); ++c) {
      const auto [x, y] = norm_coords(c);
      raster.at(c) = p.offset + p.scale * SpatialField(p, x, y);
    }
    offsets[schema.StaticIndex(v)] = p.offset;
    scales[schema.StaticIndex(v)] = p.scale;
    stack->statics.push_back(std::move(raster));
  }

  SynthWorld world;
  world.config = config;
  world.config.weights = weights;
  world.oracle = SynthOracle(stack, weights, offsets, scales, config.bias,
                             config.noise, config.seed);
  world.stack = stack;

  // Weighted sampling without replacement over every (cell, date) with a
  // full feature history: keep the k largest keys log(u) / s.
  using Candidate = std::tuple<double, geo::CellId, int>;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> best;
  Rng rng(DeriveSeed(config.seed, HashString("presences")));
  const int first_day = kOldestOffset;
  for (geo::CellId c = 0; c < grid.size(); ++c) {
    for (int d = first_day; d < num_days; ++d) {
      const Date date = config.start_date + std::chrono::days(d);
      const double s = world.oracle.Suitability(c, date);
      double u = UniformUnit(rng);
      while (u <= 0.0) u = UniformUnit(rng);
      const double key = s > 0.0 ? std::log(u) / s
                                 : -std::numeric_limits<double>::infinity();
      if (static_cast<int>(best.size()) < config.presence_count) {
        best.emplace(key, c, d);
      } else if (key > std::get<0>(best.top())) {
        best.pop();
        best.emplace(key, c, d);
      }
    }
  }
  std::vector<std::pair<int, geo::CellId>> picked;
  while (!best.empty()) {
    picked.emplace_back(std::get<2>(best.top()), std::get<1>(best.top()));
    best.pop();
  }
  std::sort(picked.begin(), picked.end());
  Rng jitter(DeriveSeed(config.seed, HashString("jitter")));
  long long id = 1;
  for (const auto& [d, c] : picked) {
    const geo::GeoPoint center = grid.Center(c);
    const double res = grid.resolution();
    Observation obs;
    obs.id = id++;
    obs.location = geo::GeoPoint{
        center.lat + 0.9 * res * (UniformUnit(jitter) - 0.5),
        center.lon + 0.9 * res * (UniformUnit(jitter) - 0.5)};
    obs.date = config.start_date + std::chrono::days(d);
    obs.presence = true;
    world.presences.push_back(obs);
  }
  return world;
}

}  // namespace locust_sdm::dataset
