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

#include "locust_sdm/metrics.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "locust_sdm/errors.h"

namespace locust_sdm::eval {

Confusion Tally(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "label and prediction counts differ");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      (predictions[i] ? c.tp : c.fn) += 1;
    } else {
      (predictions[i] ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

double Accuracy(const Confusion& c) {
  if (c.total() == 0) throw Error(ErrorCode::kEmptyEvaluation, "no rows");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double F1(const Confusion& c) {
  if (c.total() == 0) throw Error(ErrorCode::kEmptyEvaluation, "no rows");
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0
                    : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double Auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "score and label counts differ");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kSingleClass, "AUC needs both classes");
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

}  // namespace locust_sdm::eval
