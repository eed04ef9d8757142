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
#include <limits>
#include <string_view>

#include "slay/attention_output.hpp"
#include "slay/kernels.hpp"

namespace slay {

enum class ExactKernel { softmax, yat, spherical_yat };

inline std::string_view to_string(ExactKernel k) noexcept {
  switch (k) {
    case ExactKernel::softmax: return "softmax";
    case ExactKernel::yat: return "yat";
    case ExactKernel::spherical_yat: return "spherical-yat";
  }
  return "?";
}

struct ExactOptions {
  bool causal = false;
  double delta = kDefaultDelta;
  /// Scale softmax logits by 1/sqrt(d).
  bool scale_softmax = true;
  /// 0 materializes the full L x L score matrix. A positive value computes
  /// scores in blocks of that many rows (same arithmetic, O(block * L) memory).
  std::size_t row_block = 0;
};

namespace detail {

template <typename T>
AttentionOutput<T> exact_attention_rows(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                        ExactKernel kernel, const KernelParams& p,
                                        const ExactOptions& opt) {
  const std::size_t n = q.rows();
  require(n >= 1, ErrorKind::usage, "exact_attention: empty sequence");
  require(k.rows() == n && v.rows() == n, ErrorKind::usage, "exact_attention: length mismatch");
  require(q.cols() == k.cols(), ErrorKind::usage, "exact_attention: query/key width mismatch");
  require(opt.delta >= 0.0, ErrorKind::config, "exact_attention: delta must be nonnegative");

  const std::size_t d = q.cols();
  const std::size_t block = opt.row_block == 0 ? n : std::min(opt.row_block, n);
  const double logit_scale = opt.scale_softmax ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;

  const Matrix<T> kt = transpose(k);
  std::vector<double> k_sq(n);
  std::vector<double> q_sq(n);
  for (std::size_t j = 0; j < n; ++j) {
    k_sq[j] = static_cast<double>(dot(k.row(j), k.row(j)));
    q_sq[j] = static_cast<double>(dot(q.row(j), q.row(j)));
  }

  AttentionOutput<T> out{Matrix<T>(n, v.cols()), std::vector<double>(n), {}};
  Matrix<T> scores(block, n);

  for (std::size_t first = 0; first < n; first += block) {
    const std::size_t rows = std::min(block, n - first);
    for (std::size_t b = 0; b < rows; ++b) {
      const std::size_t i = first + b;
      const std::size_t width = opt.causal ? i + 1 : n;
      auto s = scores.row(b).first(width);
      std::fill(s.begin(), s.end(), T(0));
      for (std::size_t a = 0; a < d; ++a) axpy<T>(q(i, a), kt.row(a).first(width), s);

      double denom = 0.0;
      if (kernel == ExactKernel::softmax) {
        double peak = -std::numeric_limits<double>::infinity();
        for (T x : s) peak = std::max(peak, static_cast<double>(x) * logit_scale);
        for (T& x : s) {
          x = static_cast<T>(std::exp(static_cast<double>(x) * logit_scale - peak));
          denom += static_cast<double>(x);
        }
      } else if (kernel == ExactKernel::yat) {
        for (std::size_t j = 0; j < width; ++j) {
          const double x = static_cast<double>(s[j]);
          const double dist2 = std::max(0.0, q_sq[i] + k_sq[j] - 2.0 * x);
          s[j] = static_cast<T>(x * x / (dist2 + p.epsilon()));
          denom += static_cast<double>(s[j]);
        }
      } else {
        for (T& xs : s) {
          const double x = std::clamp(static_cast<double>(xs), -1.0, 1.0);
          xs = static_cast<T>(x * x / spherical_denominator(x, p));
          denom += static_cast<double>(xs);
        }
      }

      out.denominators[i] = denom;
      const double total = kernel == ExactKernel::softmax ? denom : denom + opt.delta;
      if (!(denom > 0.0)) out.degenerate_rows.push_back(i);
      if (!(total > 0.0)) continue;
      auto y = out.y.row(i);
      for (std::size_t j = 0; j < width; ++j) axpy<T>(s[j], v.row(j), y);
      const T inv = static_cast<T>(1.0 / total);
      for (T& val : y) val *= inv;
    }
  }
  return out;
}

}  // namespace detail

/// Quadratic-cost reference attention over a normalized sequence. softmax uses
/// exp of (optionally 1/sqrt(d)-scaled) cosines; the Yat variants use
/// kernel-normalized rows y_i = sum_j A_ij v_j / (sum_j A_ij + delta).
template <typename T>
AttentionOutput<T> exact_attention(const NormalizedSequence<T>& seq, ExactKernel kernel,
                                   const KernelParams& p, const ExactOptions& opt = {}) {
  return detail::exact_attention_rows(seq.q_hat, seq.k_hat, seq.v, kernel, p, opt);
}

/// Same oracle on raw rows; spherical-yat normalizes first, the others use
/// the rows as given.
template <typename T>
AttentionOutput<T> exact_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                   ExactKernel kernel, const KernelParams& p,
                                   const ExactOptions& opt = {}) {
  if (kernel == ExactKernel::spherical_yat) {
    return detail::exact_attention_rows(normalize_rows(q).rows, normalize_rows(k).rows, v, kernel,
                                        p, opt);
  }
  return detail::exact_attention_rows(q, k, v, kernel, p, opt);
}

/// Kernel-normalized attention with an explicitly supplied score matrix.
/// Used as the oracle for the linear-time contractions.
template <typename T>
AttentionOutput<T> explicit_gram_attention(const Matrix<T>& scores, const Matrix<T>& v,
                                           double delta, bool causal) {
  const std::size_t n = scores.rows();
  require(scores.cols() == n && v.rows() == n, ErrorKind::usage,
          "explicit_gram_attention: shape mismatch");
  AttentionOutput<T> out{Matrix<T>(n, v.cols()), std::vector<double>(n), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t width = causal ? i + 1 : n;
    double denom = 0.0;
    for (std::size_t j = 0; j < width; ++j) denom += static_cast<double>(scores(i, j));
    out.denominators[i] = denom;
    if (!(denom > 0.0)) out.degenerate_rows.push_back(i);
    if (!(denom + delta > 0.0)) continue;
    auto y = out.y.row(i);
    for (std::size_t j = 0; j < width; ++j) axpy<T>(scores(i, j), v.row(j), y);
    const T inv = static_cast<T>(1.0 / (denom + delta));
    for (T& val : y) val *= inv;
  }
  return out;
}

}  // namespace slay
