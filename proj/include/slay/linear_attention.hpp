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
#include <thread>
#include <vector>

#include "slay/attention_output.hpp"
#include "slay/kernels.hpp"

namespace slay {

namespace detail {

inline void check_linear_shapes(std::size_t lq, std::size_t mq, std::size_t lk, std::size_t mk,
                                std::size_t lv, double delta) {
  require(lq == lk && lk == lv, ErrorKind::usage, "linear attention: sequence lengths differ");
  require(mq == mk, ErrorKind::usage, "linear attention: feature widths differ");
  require(delta >= 0.0, ErrorKind::config, "linear attention: delta must be nonnegative");
}

/// Writes y_i = numerator / (denominator + delta) and applies the degenerate-row policy.
template <typename T>
void finish_row(AttentionOutput<T>& out, std::size_t i, double denom, double delta) {
  out.denominators[i] = denom;
  auto y = out.y.row(i);
  if (!(denom > 0.0)) out.degenerate_rows.push_back(i);
  if (!(denom + delta > 0.0)) {
    std::fill(y.begin(), y.end(), T(0));
    return;
  }
  const T inv = static_cast<T>(1.0 / (denom + delta));
  for (T& v : y) v *= inv;
}

}  // namespace detail

/// Y = Psi_Q (Psi_K^T V) / (Psi_Q (Psi_K^T 1) + delta), row-wise. Auxiliary
/// state is the m x d_V matrix Psi_K^T V and the m-vector Psi_K^T 1.
template <typename T>
AttentionOutput<T> linear_attention(const Matrix<T>& psi_q, const Matrix<T>& psi_k,
                                    const Matrix<T>& v, double delta = kDefaultDelta) {
  detail::check_linear_shapes(psi_q.rows(), psi_q.cols(), psi_k.rows(), psi_k.cols(), v.rows(),
                              delta);
  const std::size_t n = psi_q.rows();
  const std::size_t m = psi_q.cols();
  const Matrix<T> kv = transposed_matmul(psi_k, v);
  TrackedVector<T> z(m, T(0));
  for (std::size_t j = 0; j < n; ++j) axpy<T>(T(1), psi_k.row(j), z);

  AttentionOutput<T> out{Matrix<T>(n, v.cols()), std::vector<double>(n), {}};
  for (std::size_t i = 0; i < n; ++i) {
    auto q = psi_q.row(i);
    auto y = out.y.row(i);
    for (std::size_t a = 0; a < m; ++a) axpy<T>(q[a], kv.row(a), y);
    const double denom = static_cast<double>(dot<T>(q, z));
    detail::finish_row(out, i, denom, delta);
  }
  return out;
}

/// Running prefix state (S, z) = (sum_j psi_k_j v_j^T, sum_j psi_k_j).
/// combine() is associative, which is what the chunked scan relies on.
template <typename T>
struct CausalState {
  Matrix<T> s;
  TrackedVector<T> z;

  CausalState(std::size_t m, std::size_t dv) : s(m, dv), z(m, T(0)) {}

  void absorb(std::span<const T> psi_k, std::span<const T> v) {
    for (std::size_t a = 0; a < psi_k.size(); ++a) {
      axpy<T>(psi_k[a], v, s.row(a));
      z[a] += psi_k[a];
    }
  }

  void combine(const CausalState& later) {
    auto dst = s.data();
    auto src = later.s.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t a = 0; a < z.size(); ++a) z[a] += later.z[a];
  }
};

namespace detail {

template <typename T>
void causal_rows(const Matrix<T>& psi_q, const Matrix<T>& psi_k, const Matrix<T>& v,
                 double delta, std::size_t first, std::size_t last, CausalState<T>& state,
                 AttentionOutput<T>& out, std::vector<std::size_t>& degenerate) {
  const std::size_t m = psi_q.cols();
  for (std::size_t i = first; i < last; ++i) {
    state.absorb(psi_k.row(i), v.row(i));
    auto q = psi_q.row(i);
    auto y = out.y.row(i);
    for (std::size_t a = 0; a < m; ++a) axpy<T>(q[a], state.s.row(a), y);
    const double denom = static_cast<double>(dot<T>(q, std::span<const T>(state.z)));
    out.denominators[i] = denom;
    if (!(denom > 0.0)) degenerate.push_back(i);
    if (!(denom + delta > 0.0)) {
      std::fill(y.begin(), y.end(), T(0));
      continue;
    }
    const T inv = static_cast<T>(1.0 / (denom + delta));
    for (T& val : y) val *= inv;
  }
}

}  // namespace detail

/// Causal prefix-sum form: one left-to-right pass with O(m d_V) state.
/// This is the serial-deterministic path.
template <typename T>
AttentionOutput<T> causal_linear_attention(const Matrix<T>& psi_q, const Matrix<T>& psi_k,
                                           const Matrix<T>& v, double delta = kDefaultDelta) {
  detail::check_linear_shapes(psi_q.rows(), psi_q.cols(), psi_k.rows(), psi_k.cols(), v.rows(),
                              delta);
  const std::size_t n = psi_q.rows();
  AttentionOutput<T> out{Matrix<T>(n, v.cols()), std::vector<double>(n), {}};
  CausalState<T> state(psi_q.cols(), v.cols());
  detail::causal_rows(psi_q, psi_k, v, delta, 0, n, state, out, out.degenerate_rows);
  return out;
}

/// Block prefix-sum variant: per-chunk partial states are reduced with an
/// exclusive scan, then each chunk replays its rows from its prefix state.
/// Matches the serial path up to floating-point reassociation.
template <typename T>
AttentionOutput<T> causal_linear_attention_chunked(const Matrix<T>& psi_q, const Matrix<T>& psi_k,
                                                   const Matrix<T>& v, double delta,
                                                   std::size_t chunk, unsigned threads = 1) {
  detail::check_linear_shapes(psi_q.rows(), psi_q.cols(), psi_k.rows(), psi_k.cols(), v.rows(),
                              delta);
  require(chunk >= 1, ErrorKind::usage, "chunked causal attention: chunk must be >= 1");
  const std::size_t n = psi_q.rows();
  const std::size_t m = psi_q.cols();
  const std::size_t dv = v.cols();
  const std::size_t chunks = (n + chunk - 1) / chunk;
  threads = std::max(1u, threads);

  const auto parallel_for = [&](auto&& body) {
    if (threads == 1 || chunks == 1) {
      for (std::size_t c = 0; c < chunks; ++c) body(c);
      return;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < chunks; c += threads) body(c);
      });
  };

  std::vector<CausalState<T>> local(chunks, CausalState<T>(m, dv));
  parallel_for([&](std::size_t c) {
    const std::size_t last = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < last; ++i) local[c].absorb(psi_k.row(i), v.row(i));
  });

  std::vector<CausalState<T>> prefix(chunks, CausalState<T>(m, dv));
  for (std::size_t c = 1; c < chunks; ++c) {
    prefix[c] = prefix[c - 1];
    prefix[c].combine(local[c - 1]);
  }

  AttentionOutput<T> out{Matrix<T>(n, dv), std::vector<double>(n), {}};
  std::vector<std::vector<std::size_t>> degenerate(chunks);
  parallel_for([&](std::size_t c) {
    const std::size_t last = std::min(n, (c + 1) * chunk);
    detail::causal_rows(psi_q, psi_k, v, delta, c * chunk, last, prefix[c], out, degenerate[c]);
  });
  for (const auto& d : degenerate)
    out.degenerate_rows.insert(out.degenerate_rows.end(), d.begin(), d.end());
  return out;
}

}  // namespace slay
