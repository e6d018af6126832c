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

#ifndef LOCUST_SDM_MATRIX_H_
#define LOCUST_SDM_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace locust_sdm {

// Dense row-major matrix of doubles. Rows are observations, columns are
// features throughout the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }

  // The first appended row fixes the column count of an empty matrix.
  void AppendRow(std::span<const double> values);
  void Reserve(std::size_t rows) { data_.reserve(rows * cols_); }

  Matrix SelectRows(std::span<const std::size_t> indices) const;
  Matrix SelectColumns(std::span<const std::size_t> indices) const;
  std::vector<double> Column(std::size_t c) const;

  // Stacks `other` below this matrix; column counts must agree.
  void Append(const Matrix& other);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace locust_sdm

#endif  // LOCUST_SDM_MATRIX_H_
