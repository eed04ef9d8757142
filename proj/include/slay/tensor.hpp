// Copyright 2026 The SLAY Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "slay/error.hpp"
#include "slay/memory.hpp"

namespace slay {

template <typename T>
using TrackedVector = std::vector<T, TrackingAllocator<T>>;

/// Dense row-major matrix. Storage is tracked so benchmark scopes can account
/// for auxiliary memory.
template <typename T = double>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      require(row.size() == c, ErrorKind::usage, "ragged initializer for Matrix");
      std::copy(row.begin(), row.end(), m.row(i++).begin());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<T> data() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> data() const noexcept { return {data_.data(), data_.size()}; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  /// Copy of rows [first, first + count).
  Matrix slice_rows(std::size_t first, std::size_t count) const {
    Matrix out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                out.data_.begin());
    return out;
  }

  /// Copy of columns [first, first + count).
  Matrix slice_cols(std::size_t first, std::size_t count) const {
    Matrix out(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i) {
      std::copy_n(row(i).begin() + static_cast<std::ptrdiff_t>(first), count, out.row(i).begin());
    }
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  TrackedVector<T> data_;
};

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) noexcept {
  assert(a.size() == b.size());
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T dot(std::span<T> a, std::span<T> b) noexcept {
  return dot(std::span<const T>(a), std::span<const T>(b));
}

/// y += alpha * x
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) noexcept {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

/// a * b, i-k-j order so the inner loop streams rows of b.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols() == b.rows(), ErrorKind::usage, "matmul: inner dimensions differ");
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy<T>(a(i, k), b.row(k), out_row);
  }
  return out;
}

/// a * b^T
template <typename T>
Matrix<T> matmul_transposed(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols() == b.cols(), ErrorKind::usage, "matmul_transposed: column counts differ");
  return matmul(a, transpose(b));
}

/// a^T * b
template <typename T>
Matrix<T> transposed_matmul(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.rows() == b.rows(), ErrorKind::usage, "transposed_matmul: row counts differ");
  Matrix<T> out(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    auto b_row = b.row(l);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy<T>(a(l, k), b_row, out.row(k));
  }
  return out;
}

template <typename T>
double frobenius_norm(const Matrix<T>& a) noexcept {
  double acc = 0.0;
  for (T v : a.data()) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

template <typename T>
Matrix<T> identity(std::size_t n) {
  Matrix<T> out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = T(1);
  return out;
}

inline constexpr double kDefaultNormFloor = 1e-12;

template <typename T>
struct NormalizedRows {
  Matrix<T> rows;
  std::vector<double> norms;
};

/// Divides each row by max(||row||, floor). Zero rows stay zero and report
/// `floor` as their norm.
template <typename T>
NormalizedRows<T> normalize_rows(const Matrix<T>& m, double floor = kDefaultNormFloor) {
  require(m.cols() >= 1, ErrorKind::usage, "normalize_rows: matrix has no columns");
  require(floor > 0.0, ErrorKind::usage, "normalize_rows: floor must be positive");
  NormalizedRows<T> out{Matrix<T>(m.rows(), m.cols()), std::vector<double>(m.rows())};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    double sq = 0.0;
    for (T v : src) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::numeric,
             "normalize_rows: non-finite entry in row " + std::to_string(i));
      }
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double norm = std::max(std::sqrt(sq), floor);
    out.norms[i] = norm;
    auto dst = out.rows.row(i);
    for (std::size_t j = 0; j < src.size(); ++j)
      dst[j] = static_cast<T>(static_cast<double>(src[j]) / norm);
  }
  return out;
}

/// Unit-norm query/key rows plus the untouched values.
template <typename T = double>
struct NormalizedSequence {
  Matrix<T> q_hat;
  Matrix<T> k_hat;
  Matrix<T> v;
  std::vector<double> q_norms;
  std::vector<double> k_norms;

  std::size_t length() const noexcept { return q_hat.rows(); }

  static NormalizedSequence make(const Matrix<T>& q, const Matrix<T>& k, Matrix<T> v,
                                 double floor = kDefaultNormFloor) {
    require(q.cols() == k.cols(), ErrorKind::usage, "query/key widths differ");
    require(q.cols() >= 2, ErrorKind::usage, "query/key width must be at least 2");
    require(q.rows() == k.rows() && k.rows() == v.rows(), ErrorKind::usage,
            "query/key/value lengths differ");
    auto nq = normalize_rows(q, floor);
    auto nk = normalize_rows(k, floor);
    return NormalizedSequence{std::move(nq.rows), std::move(nk.rows), std::move(v),
                              std::move(nq.norms), std::move(nk.norms)};
  }
};

}  // namespace slay
