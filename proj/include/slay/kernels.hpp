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
#include <cmath>
#include <span>
#include <string>

#include "slay/linalg.hpp"
#include "slay/tensor.hpp"

namespace slay {

inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr double kDefaultDelta = 1e-6;
/// Slack allowed on |x| <= 1 for cosines produced by floating-point normalization.
inline constexpr double kCosineSlack = 1e-9;

/// Kernel stabilizer epsilon and the derived constant C = 2 + epsilon.
class KernelParams {
 public:
  KernelParams() = default;
  explicit KernelParams(double epsilon) : epsilon_(epsilon) {
    require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::config,
            "kernel epsilon must be positive and finite");
  }

  double epsilon() const noexcept { return epsilon_; }
  double c() const noexcept { return 2.0 + epsilon_; }

 private:
  double epsilon_ = kDefaultEpsilon;
};

/// (q.k)^2 / (||q - k||^2 + eps) on arbitrary vectors.
template <typename T>
double yat_kernel(std::span<const T> q, std::span<const T> k, const KernelParams& p) {
  require(q.size() == k.size(), ErrorKind::usage, "yat_kernel: dimension mismatch");
  double qk = 0.0;
  double dist2 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double a = static_cast<double>(q[i]);
    const double b = static_cast<double>(k[i]);
    qk += a * b;
    dist2 += (a - b) * (a - b);
  }
  return qk * qk / (dist2 + p.epsilon());
}

/// Clamps a cosine into [-1, 1], rejecting values outside the slack band.
inline double clamp_cosine(double x) {
  if (!(std::abs(x) <= 1.0 + kCosineSlack))
    fail(ErrorKind::numeric, "cosine " + std::to_string(x) + " outside [-1, 1]");
  return std::clamp(x, -1.0, 1.0);
}

/// C - 2x in its chordal form 2(1 - x) + eps, which is exactly eps at x = 1.
inline double spherical_denominator(double x, const KernelParams& p) noexcept {
  return 2.0 * (1.0 - x) + p.epsilon();
}

/// x^2 / (C - 2x): the Yat kernel restricted to the unit sphere, x = q.k.
inline double spherical_yat_scalar(double x, const KernelParams& p) {
  x = clamp_cosine(x);
  return x * x / spherical_denominator(x, p);
}

/// d/dx of spherical_yat_scalar: 2x(C - x) / (C - 2x)^2.
inline double spherical_yat_derivative(double x, const KernelParams& p) {
  x = clamp_cosine(x);
  const double denom = spherical_denominator(x, p);
  return 2.0 * x * (p.c() - x) / (denom * denom);
}

/// Smallest eigenvalue of the spherical-kernel Gram matrix over unit rows.
template <typename T>
double pd_spot_check(const Matrix<T>& points, const KernelParams& p) {
  const std::size_t n = points.rows();
  require(n >= 1 && n <= 200, ErrorKind::usage, "pd_spot_check: need 1..200 points");
  require(points.cols() >= 2, ErrorKind::usage, "pd_spot_check: dimension must be >= 2");
  Matrix<double> gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double x = static_cast<double>(dot(points.row(i), points.row(j)));
      gram(i, j) = gram(j, i) = spherical_yat_scalar(x, p);
    }
  }
  return symmetric_eigh(gram).values.front();
}

}  // namespace slay
