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

#include "locust_sdm/matrix.h"

#include <cmath>
#include <string>

#include "locust_sdm/errors.h"
#include "locust_sdm/random.h"

namespace locust_sdm {

void Matrix::AppendRow(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw Error(ErrorCode::kSchemaMismatch,
                "row has " + std::to_string(values.size()) +
                    " values, matrix has " + std::to_string(cols_) +
                    " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::SelectRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::SelectColumns(std::span<const std::size_t> indices) const {
  Matrix out(rows_, indices.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < indices.size(); ++c) {
      out(r, c) = (*this)(r, indices[c]);
    }
  }
  return out;
}

std::vector<double> Matrix::Column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::Append(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && data_.empty()) {
    *this = other;
    return;
  }
  if (other.cols_ != cols_) {
    throw Error(ErrorCode::kSchemaMismatch, "cannot stack matrices with " +
                                                std::to_string(cols_) +
                                                " and " +
                                                std::to_string(other.cols_) +
                                                " columns");
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

double StandardNormal(Rng& rng) {
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace locust_sdm
