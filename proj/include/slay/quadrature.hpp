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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "slay/kernels.hpp"

namespace slay {

inline constexpr std::size_t kDefaultQuadratureNodes = 3;
inline constexpr std::size_t kMaxQuadratureNodes = 64;
inline constexpr double kLaguerreResidualTol = 1e-13;

/// Standard Gauss-Laguerre rule for int_0^inf e^{-t} f(t) dt.
struct LaguerreRule {
  std::vector<double> t;
  std::vector<double> alpha;
};

/// Gauss-Laguerre rule after the substitution t = C s:
///   int_0^inf e^{-C s} h(s) ds ~= sum_r w_r h(s_r),  s_r = t_r / C,  w_r = alpha_r / C.
struct QuadratureRule {
  std::size_t r = 0;
  std::vector<double> t;
  std::vector<double> alpha;
  std::vector<double> s;
  std::vector<double> w;
  double c = 0.0;
};

/// (L_n(t), L_{n-1}(t)) from the three-term recurrence.
inline std::pair<double, double> laguerre_pair(std::size_t n, double t) noexcept {
  double prev = 1.0;  // L_0
  if (n == 0) return {prev, 0.0};
  double cur = 1.0 - t;  // L_1
  for (std::size_t k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 - t) * cur - static_cast<double>(k) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

inline double laguerre(std::size_t n, double t) noexcept { return laguerre_pair(n, t).first; }

/// Roots of L_r by Newton iteration (Stroud-style initial guesses) and the
/// matching weights alpha_i = t_i / ((r+1)^2 L_{r+1}(t_i)^2).
///
/// A node is accepted once |L_r(t)| <= 1e-13 or the Newton step falls to a
/// few ulps of t; for large r, L_r grows like e^{t/2} at the outer nodes and
/// the absolute residual alone cannot reach 1e-13 in double precision.
inline LaguerreRule gauss_laguerre(std::size_t r) {
  require(r >= 1 && r <= kMaxQuadratureNodes, ErrorKind::config,
          "gauss_laguerre: node count must be in [1, 64], got " + std::to_string(r));
  const double n = static_cast<double>(r);
  LaguerreRule rule{std::vector<double>(r), std::vector<double>(r)};
  double z = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (i == 0) {
      z = 3.0 / (1.0 + 2.4 * n);
    } else if (i == 1) {
      z += 15.0 / (1.0 + 2.5 * n);
    } else {
      const double ai = static_cast<double>(i - 1);
      z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - rule.t[i - 2]);
    }
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [ln, lnm1] = laguerre_pair(r, z);
      if (std::abs(ln) <= kLaguerreResidualTol) {
        converged = true;
        break;
      }
      const double deriv = n * (ln - lnm1) / z;
      const double step = ln / deriv;
      z -= step;
      if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * z) {
        converged = true;
        break;
      }
    }
    if (!converged)
      fail(ErrorKind::numeric, "gauss_laguerre: Newton failed to converge for node " +
                                   std::to_string(i) + " of " + std::to_string(r));
    rule.t[i] = z;
    const double next = laguerre(r + 1, z);
    rule.alpha[i] = z / ((n + 1.0) * (n + 1.0) * next * next);
  }
  for (std::size_t i = 1; i < r; ++i)
    if (!(rule.t[i] > rule.t[i - 1]))
      fail(ErrorKind::numeric, "gauss_laguerre: nodes not strictly increasing");
  return rule;
}

inline QuadratureRule scale_rule(const LaguerreRule& raw, double c) {
  require(c > 0.0, ErrorKind::config, "scale_rule: C must be positive");
  require(raw.t.size() == raw.alpha.size() && !raw.t.empty(), ErrorKind::usage,
          "scale_rule: malformed raw rule");
  QuadratureRule rule{raw.t.size(), raw.t, raw.alpha, {}, {}, c};
  rule.s.reserve(rule.r);
  rule.w.reserve(rule.r);
  for (std::size_t i = 0; i < rule.r; ++i) {
    rule.s.push_back(raw.t[i] / c);
    rule.w.push_back(raw.alpha[i] / c);
  }
  return rule;
}

inline QuadratureRule scale_rule(const LaguerreRule& raw, const KernelParams& p) {
  return scale_rule(raw, p.c());
}

inline QuadratureRule make_rule(std::size_t r, const KernelParams& p) {
  return scale_rule(gauss_laguerre(r), p);
}

namespace detail {
inline double checked_cosine(double x, const QuadratureRule& rule) {
  x = clamp_cosine(x);
  // Bernstein representation of 1/(C - 2x) needs C - 2x > 0.
  if (!(rule.c - 2.0 * x > 0.0))
    fail(ErrorKind::numeric, "C - 2x must be positive for the Laplace representation");
  return x;
}
}  // namespace detail

/// Per-node terms w_r x^2 e^{2 s_r x}.
inline std::vector<double> quadrature_node_terms(double x, const QuadratureRule& rule) {
  x = detail::checked_cosine(x, rule);
  std::vector<double> terms(rule.r);
  for (std::size_t i = 0; i < rule.r; ++i)
    terms[i] = rule.w[i] * x * x * std::exp(2.0 * rule.s[i] * x);
  return terms;
}

/// sum_r w_r x^2 e^{2 s_r x}, the discretized spherical kernel.
inline double quadrature_kernel_estimate(double x, const QuadratureRule& rule) {
  double acc = 0.0;
  for (double term : quadrature_node_terms(x, rule)) acc += term;
  return acc;
}

/// |x^2/(C-2x) - [(C^2/4) sum_r w_r e^{2 s_r x} - C/4 - x/2]|, the residual of
/// the affine-corrected pure-exponential decomposition.
inline double pure_laplace_identity_check(double x, const QuadratureRule& rule) {
  require(rule.r >= 32, ErrorKind::config, "pure_laplace_identity_check: needs R >= 32");
  x = detail::checked_cosine(x, rule);
  const double c = rule.c;
  double mixture = 0.0;
  for (std::size_t i = 0; i < rule.r; ++i) mixture += rule.w[i] * std::exp(2.0 * rule.s[i] * x);
  const double lhs = x * x / (c - 2.0 * x);
  const double rhs = 0.25 * c * c * mixture - 0.25 * c - 0.5 * x;
  return std::abs(lhs - rhs);
}

}  // namespace slay
