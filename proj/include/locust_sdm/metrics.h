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

#ifndef LOCUST_SDM_METRICS_H_
#define LOCUST_SDM_METRICS_H_

#include <cstddef>
#include <span>

namespace locust_sdm::eval {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Labels and predictions are 0/1.
Confusion Tally(std::span<const int> labels, std::span<const int> predictions);

// Both throw Error(kEmptyEvaluation) on an empty confusion. F1 is 0 when
// tp = fp = fn = 0.
double Accuracy(const Confusion& c);
double F1(const Confusion& c);

// Mann-Whitney AUC with midranks for ties. Throws Error(kSingleClass) unless
// both labels occur.
double Auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace locust_sdm::eval

#endif  // LOCUST_SDM_METRICS_H_
