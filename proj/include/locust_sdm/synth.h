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

// Virtual-species worlds: smooth random environmental fields, a known linear
// suitability function over the assembled features, and presences drawn in
// proportion to that suitability. The oracle answers the true label of any
// (cell, date), which lets pipelines be scored against ground truth.

#ifndef LOCUST_SDM_SYNTH_H_
#define LOCUST_SDM_SYNTH_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "locust_sdm/dataset.h"
#include "locust_sdm/geo.h"
#include "locust_sdm/io.h"

namespace locust_sdm::dataset {

struct SynthWorldConfig {
  geo::BBox bbox{10.0, 15.0, 0.0, 5.0};
  double resolution = geo::kDefaultResolutionDeg;
  Date start_date = *ParseDate("2014-01-01");
  Date end_date = *ParseDate("2015-12-31");
  int num_temporal = 12;
  int num_static = 6;
  // One weight per feature on the standardized scale; empty selects
  // DefaultSynthWeights.
  std::vector<double> weights;
  double bias = -2.0;
  int presence_count = 100;
  // Standard deviation of the per-(cell, date) Gaussian margin noise.
  double noise = 0.5;
  std::uint64_t seed = 42;
};

// A few dominant features (surface soil moisture and albedo in the latest
// window, topsoil clay) plus small seeded weights elsewhere.
std::vector<double> DefaultSynthWeights(const FeatureSchema& schema,
                                        std::uint64_t seed);

class SynthOracle {
 public:
  SynthOracle() = default;
  SynthOracle(std::shared_ptr<const RasterStack> stack,
              std::vector<double> weights, std::vector<double> offsets,
              std::vector<double> scales, double bias, double noise,
              std::uint64_t seed);

  // bias + w . standardized features (+ noise).
  double Margin(geo::CellId cell, Date date, bool with_noise = true) const;
  double Suitability(geo::CellId cell, Date date,
                     bool with_noise = true) const;
  // True presence iff suitability >= 0.5.
  bool Label(geo::CellId cell, Date date) const;
  bool Label(const geo::GeoPoint& location, Date date) const;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& offsets() const { return offsets_; }
  const std::vector<double>& scales() const { return scales_; }
  double bias() const { return bias_; }
  double noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }
  // Maps a raw feature row onto the scale the weights act on.
  std::vector<double> Standardize(std::span<const double> features) const;

 private:
  double Noise(geo::CellId cell, Date date) const;

  std::shared_ptr<const RasterStack> stack_;
  std::vector<double> weights_;
  std::vector<double> offsets_;
  std::vector<double> scales_;
  double bias_ = 0.0;
  double noise_ = 0.0;
  std::uint64_t seed_ = 0;
};

struct SynthWorld {
  SynthWorldConfig config;
  std::shared_ptr<const RasterStack> stack;
  // Sorted by date, then id; located uniformly inside their cells.
  std::vector<Observation> presences;
  SynthOracle oracle;
};

// Throws Error(kConfig) on a weight vector of the wrong length, an empty
// period, fewer dates than one feature history, or presence_count < 1.
SynthWorld SynthGenerate(const SynthWorldConfig& config);

}  // namespace locust_sdm::dataset

#endif  // LOCUST_SDM_SYNTH_H_
