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

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "slay/tensor.hpp"

namespace slay {

/// FAVOR+ in its ReLU-feature form: relu(W u) / sqrt(m).
template <typename T>
Matrix<T> favor_plus_features(const Matrix<T>& u, const Matrix<double>& omega) {
  require(omega.rows() >= 1, ErrorKind::usage, "favor_plus_features: need at least one feature");
  require(omega.cols() == u.cols(), ErrorKind::usage, "favor_plus_features: omega width mismatch");
  Matrix<T> out = matmul_transposed(u, omega.cast<T>());
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(omega.rows())));
  for (T& v : out.data()) v = v > T(0) ? v * scale : T(0);
  return out;
}

/// elu(x) + 1, elementwise: x + 1 for x >= 0, e^x otherwise.
template <typename T>
Matrix<T> elu_plus_one_features(const Matrix<T>& u) {
  Matrix<T> out = u;
  for (T& v : out.data()) v = v >= T(0) ? v + T(1) : static_cast<T>(std::exp(static_cast<double>(v)));
  return out;
}

/// Cosformer-style re-weighting: [relu(u) cos(pi i / 2M), relu(u) sin(pi i / 2M)]
/// so that <phi(q_i), phi(k_j)> = relu(q).relu(k) cos(pi (i - j) / 2M).
template <typename T>
Matrix<T> cosformer_features(const Matrix<T>& u, std::span<const std::size_t> positions,
                             std::size_t max_len) {
  require(positions.size() == u.rows(), ErrorKind::usage,
          "cosformer_features: one position per row required");
  require(max_len >= 1, ErrorKind::usage, "cosformer_features: max_len must be >= 1");
  const std::size_t d = u.cols();
  Matrix<T> out(u.rows(), 2 * d);
  for (std::size_t l = 0; l < u.rows(); ++l) {
    if (l > 0 && positions[l] <= positions[l - 1])
      fail(ErrorKind::usage, "cosformer_features: positions must be strictly increasing");
    if (positions[l] >= max_len)
      fail(ErrorKind::usage, "cosformer_features: position exceeds max_len");
    const double angle = std::numbers::pi * static_cast<double>(positions[l]) /
                         (2.0 * static_cast<double>(max_len));
    const T c = static_cast<T>(std::cos(angle));
    const T s = static_cast<T>(std::sin(angle));
    auto x = u.row(l);
    auto o = out.row(l);
    for (std::size_t a = 0; a < d; ++a) {
      const T r = x[a] > T(0) ? x[a] : T(0);
      o[a] = r * c;
      o[d + a] = r * s;
    }
  }
  return out;
}

inline std::vector<std::size_t> iota_positions(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

}  // namespace slay
