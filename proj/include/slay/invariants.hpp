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
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "slay/analysis.hpp"
#include "slay/bench.hpp"
#include "slay/mechanism.hpp"

namespace slay::selftest {

struct CheckResult {
  bool passed = false;
  std::string detail;
};

struct NamedCheck {
  std::string name;  // "<module>/<property>"
  std::string summary;
  std::function<CheckResult()> run;
};

struct Outcome {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline CheckResult verdict(bool ok, const std::ostringstream& os) { return {ok, os.str()}; }

inline Matrix<double> gaussian(std::uint64_t seed, std::uint32_t index, std::size_t rows, std::size_t cols) {
  return sample_gaussian(RngStream::named(seed, StreamFamily::inputs, index), rows, cols);
}

inline Matrix<double> unit_rows(std::uint64_t seed, std::uint32_t index, std::size_t rows, std::size_t cols) {
  return sample_unit_sphere(RngStream::named(seed, StreamFamily::inputs, index), rows, cols);
}

/// Orthogonal matrix from Gram-Schmidt on Gaussian columns.
inline Matrix<double> random_orthogonal(std::uint64_t seed, std::size_t d) {
  Matrix<double> g = gaussian(seed, 99, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double proj = dot(g.row(i), g.row(j));
      axpy<double>(-proj, g.row(j), g.row(i));
    }
    const double n = std::sqrt(dot(g.row(i), g.row(i)));
    for (double& x : g.row(i)) x /= n;
  }
  return g;
}

/// Unit vectors with q.k = x exactly in the first two coordinates.
inline std::pair<Matrix<double>, Matrix<double>> pair_at_cosine(double x, std::size_t d) {
  Matrix<double> q(1, d), k(1, d);
  q(0, 0) = 1.0;
  k(0, 0) = x;
  k(0, 1) = std::sqrt(std::max(0.0, 1.0 - x * x));
  return {q, k};
}

inline double max_relative_gap(const Matrix<double>& a, const Matrix<double>& b) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    scale = std::max(scale, std::abs(b.data()[i]));
  }
  return diff / std::max(scale, 1e-300);
}

/// Linear-path output against the explicit Gram oracle, relative Frobenius gap.
inline double equivalence_gap(const Matrix<double>& psi_q, const Matrix<double>& psi_k, const Matrix<double>& v,
                              double delta, bool causal) {
  const auto lin = causal ? causal_linear_attention(psi_q, psi_k, v, delta) : linear_attention(psi_q, psi_k, v, delta);
  const auto ref = explicit_gram_attention(matmul_transposed(psi_q, psi_k), v, delta, causal);
  Matrix<double> diff = lin.y;
  for (std::size_t i = 0; i < diff.data().size(); ++i) diff.data()[i] -= ref.y.data()[i];
  const double n = frobenius_norm(ref.y);
  return n > 0.0 ? frobenius_norm(diff) / n : frobenius_norm(diff);
}

inline std::vector<SlayFeatureConfig> equivalence_configs() {
  std::vector<SlayFeatureConfig> out;
  SlayFeatureConfig base;
  base.d_prf = 8;
  base.p_anchors = 8;
  base.d_p = 16;
  base.d_t = 64;
  for (PolyKind pk : {PolyKind::exact, PolyKind::anchor, PolyKind::nystrom, PolyKind::random_maclaurin,
                      PolyKind::tensorsketch, PolyKind::none}) {
    SlayFeatureConfig c = base;
    c.poly_kind = pk;
    out.push_back(c);
  }
  SlayFeatureConfig sk = base;
  sk.fusion = FusionKind::sketch;
  out.push_back(sk);
  SlayFeatureConfig had = base;
  had.fusion = FusionKind::hadamard;
  out.push_back(had);
  return out;
}

inline std::string describe(const SlayFeatureConfig& c) {
  return std::string(to_string(c.poly_kind)) + "+" + std::string(to_string(c.fusion));
}

// ---------------------------------------------------------------------------
// tensor-core
// ---------------------------------------------------------------------------

inline CheckResult normalize_idempotent() {
  const auto m = gaussian(11, 0, 50, 16);
  const auto once = normalize_rows(m).rows;
  const auto twice = normalize_rows(once).rows;
  double gap = 0.0;
  for (std::size_t i = 0; i < once.data().size(); ++i)
    gap = std::max(gap, std::abs(once.data()[i] - twice.data()[i]));
  std::ostringstream os;
  os << "max |N(N(x)) - N(x)| = " << gap;
  return verdict(gap <= 1e-12, os);
}

inline CheckResult stream_independence() {
  const auto a = sample_gaussian(RngStream::named(7, StreamFamily::inputs, 0), 1, 10000);
  const auto b = sample_gaussian(RngStream::named(7, StreamFamily::inputs, 1), 1, 10000);
  const auto x = a.data();
  const auto y = b.data();
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double corr = sxy / std::sqrt(sxx * syy);
  std::ostringstream os;
  os << "sample correlation = " << corr;
  return verdict(std::abs(corr) < 0.05, os);
}

inline CheckResult eigh_trace() {
  const auto g = gaussian(13, 0, 20, 20);
  Matrix<double> a(20, 20);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) a(i, j) = g(i, j) + g(j, i);
  const auto eig = symmetric_eigh(a);
  double trace = 0.0;
  for (std::size_t i = 0; i < 20; ++i) trace += a(i, i);
  const double sum = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
  const double gap = std::abs(sum - trace);
  std::ostringstream os;
  os << "|sum(lambda) - trace| = " << gap << ", bound " << 1e-8 * frobenius_norm(a);
  return verdict(gap <= 1e-8 * frobenius_norm(a), os);
}

// ---------------------------------------------------------------------------
// exact-kernels
// ---------------------------------------------------------------------------

inline CheckResult boundedness() {
  const auto grid = uniform_grid(10000);
  std::ostringstream os;
  bool ok = true;
  for (double eps : {1e-3, 1e-1}) {
    const KernelParams p(eps);
    const double bound = 1.0 / eps;
    std::size_t at_bound = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double f = spherical_yat_scalar(grid[i], p);
      if (f < 0.0 || f > bound) ok = false;
      if (f == bound) {
        ++at_bound;
        if (grid[i] != 1.0) ok = false;
      }
    }
    ok = ok && at_bound == 1 && spherical_yat_scalar(1.0, p) == bound;
    os << "eps=" << eps << " f(1)=" << spherical_yat_scalar(1.0, p) << " hits=" << at_bound << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult rotation_invariance() {
  const std::size_t d = 8;
  const auto rot = random_orthogonal(17, d);
  const auto q = unit_rows(17, 1, 100, d);
  const auto k = unit_rows(17, 2, 100, d);
  const auto rq = matmul_transposed(q, rot);
  const auto rk = matmul_transposed(k, rot);
  const KernelParams p;
  double gap = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i)
    gap = std::max(gap, std::abs(yat_kernel(rq.row(i), rk.row(i), p) - yat_kernel(q.row(i), k.row(i), p)));
  std::ostringstream os;
  os << "max |k(Rq,Rk) - k(q,k)| = " << gap;
  return verdict(gap <= 1e-9, os);
}

inline CheckResult sign_non_invariance() {
  const KernelParams p;
  const double a = spherical_yat_scalar(0.5, p);
  const double b = spherical_yat_scalar(-0.5, p);
  std::ostringstream os;
  os << "k(0.5)=" << a << " k(-0.5)=" << b;
  return verdict(a != b, os);
}

inline CheckResult derivative_bound() {
  const auto grid = uniform_grid(10000);
  std::ostringstream os;
  bool ok = true;
  for (double eps : {1e-3, 1e-1}) {
    const KernelParams p(eps);
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double g = std::abs(spherical_yat_derivative(grid[i], p));
      if (!std::isfinite(g)) ok = false;
      if (g > best) best = g, arg = i;
    }
    const double expect = 2.0 * (1.0 + eps) / (eps * eps);
    ok = ok && arg == grid.size() - 1 && std::abs(best - expect) <= 1e-12 * expect;
    os << "eps=" << eps << " max=" << best << " at x=" << grid[arg] << " expect " << expect << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult oracle_consistency() {
  const auto seq = NormalizedSequence<double>::make(gaussian(19, 0, 32, 8), gaussian(19, 1, 32, 8),
                                                    gaussian(19, 2, 32, 8));
  const KernelParams p;
  double gap = 0.0;
  for (bool causal : {false, true}) {
    ExactOptions o;
    o.causal = causal;
    const auto sph = exact_attention(seq, ExactKernel::spherical_yat, p, o);
    const auto yat = exact_attention(seq.q_hat, seq.k_hat, seq.v, ExactKernel::yat, p, o);
    gap = std::max(gap, max_relative_gap(sph.y, yat.y));
  }
  std::ostringstream os;
  os << "max relative gap = " << gap;
  return verdict(gap <= 1e-12, os);
}

inline CheckResult chordal_identity() {
  const auto grid = uniform_grid(10000);
  double gap = 0.0;
  for (double eps : {1e-3, 1e-1}) {
    const KernelParams p(eps);
    for (double x : grid) gap = std::max(gap, std::abs((p.c() - 2.0 * x) - (2.0 * (1.0 - x) + eps)));
  }
  std::ostringstream os;
  os << "max |(C - 2x) - (2(1-x) + eps)| = " << gap;
  return verdict(gap <= 1e-15, os);
}

inline CheckResult pd_spot() {
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint32_t set = 0; set < 4; ++set)
    for (double eps : {1e-2, 1e-1})
      for (std::size_t d : {2u, 8u}) worst = std::min(worst, pd_spot_check(unit_rows(23, set, 50, d), KernelParams(eps)));
  std::ostringstream os;
  os << "min Gram eigenvalue = " << worst;
  return verdict(worst >= -1e-8, os);
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

inline CheckResult moment_exactness() {
  std::ostringstream os;
  bool ok = true;
  for (std::size_t r : {1u, 2u, 4u, 8u}) {
    const auto rule = gauss_laguerre(r);
    double factorial = 1.0;
    double worst = 0.0;
    double at_2r = 0.0;
    for (std::size_t k = 0; k <= 2 * r; ++k) {
      if (k > 0) factorial *= static_cast<double>(k);
      double sum = 0.0;
      for (std::size_t i = 0; i < r; ++i) sum += rule.alpha[i] * std::pow(rule.t[i], static_cast<double>(k));
      const double rel = std::abs(sum - factorial) / factorial;
      if (k < 2 * r) worst = std::max(worst, rel);
      else at_2r = rel;
    }
    ok = ok && worst <= 1e-9 && at_2r > 1e-6;
    os << "R=" << r << " exact-range " << worst << " k=2R " << at_2r << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult complete_monotone() {
  const auto grid = uniform_grid(10000);
  double slack = std::numeric_limits<double>::infinity();
  for (double eps : {1e-3, 1e-1}) {
    const KernelParams p(eps);
    for (double x : grid) slack = std::min(slack, spherical_denominator(x, p) - eps);
  }
  std::ostringstream os;
  os << "min (C - 2x) - eps = " << slack;
  return verdict(slack >= 0.0, os);
}

inline CheckResult exponential_convergence() {
  const auto rows = quadrature_convergence_sweep(KernelParams(0.1), {2, 4, 8, 16});
  std::ostringstream os;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double ratio = rows[i + 1].max_abs_error / rows[i].max_abs_error;
    ok = ok && ratio < 0.5;
    os << "E(" << rows[i + 1].r << ")/E(" << rows[i].r << ")=" << ratio << "; ";
  }
  return verdict(ok, os);
}

/// Largest R for which Gauss-Laguerre weights decrease monotonically; from
/// R = 7 on the second weight exceeds the first.
inline constexpr std::size_t kMonotoneWeightMaxNodes = 6;

inline CheckResult weight_concentration() {
  std::ostringstream os;
  bool ok = true;
  for (std::size_t r = 2; r <= kMonotoneWeightMaxNodes; ++r) {
    const auto rule = make_rule(r, KernelParams());
    for (std::size_t i = 0; i + 1 < r; ++i)
      if (!(rule.w[i] > rule.w[i + 1])) {
        ok = false;
        os << "R=" << r << " w[" << i << "] <= w[" << i + 1 << "]; ";
      }
  }
  if (ok) os << "w strictly decreasing for R = 2.." << kMonotoneWeightMaxNodes;
  return verdict(ok, os);
}

inline CheckResult positive_weights() {
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r <= kMaxQuadratureNodes; ++r)
    for (double w : make_rule(r, KernelParams()).w) smallest = std::min(smallest, w);
  std::ostringstream os;
  os << "min w = " << smallest;
  return verdict(smallest > 0.0, os);
}

// ---------------------------------------------------------------------------
// feature-maps
// ---------------------------------------------------------------------------

inline CheckResult prf_positivity() {
  const auto u = unit_rows(29, 0, 256, 16);
  const auto omega = sample_gaussian(RngStream::named(29, StreamFamily::prf_omega), 64, 16);
  double smallest = std::numeric_limits<double>::infinity();
  for (double s : {0.0, 0.1, 1.0, 5.0}) {
    const auto phi = prf_features(u, s, omega);
    for (double v : phi.data()) smallest = std::min(smallest, v);
  }
  std::ostringstream os;
  os << "min PRF entry = " << smallest;
  return verdict(smallest > 0.0, os);
}

inline CheckResult unbiasedness_chain() {
  SlayFeatureConfig cfg;
  cfg.poly_kind = PolyKind::exact;
  cfg.d_prf = 4096;
  const std::size_t d = 4;
  const std::size_t seeds = 64;
  const auto rule = make_rule(cfg.r, cfg.kernel_params());
  const auto grid = uniform_grid(9);
  std::ostringstream os;
  bool ok = true;
  double worst_z = 0.0;
  for (double x : grid) {
    const auto [q, k] = pair_at_cosine(x, d);
    std::vector<std::vector<double>> samples(cfg.r);
    for (std::size_t s = 0; s < seeds; ++s) {
      SlayFeatureConfig c = cfg;
      c.seed = 1000 + s;
      auto rnd = draw_feature_randomness(c, d);
      const auto fq = slay_features(q, c, rule, rnd);
      const auto fk = slay_features(k, c, rule, rnd);
      for (std::size_t node = 0; node < cfg.r; ++node) {
        double score = 0.0;
        for (std::size_t j = fq.node_spans[node].first; j < fq.node_spans[node].second; ++j)
          score += fq.psi(0, j) * fk.psi(0, j);
        samples[node].push_back(score);
      }
    }
    for (std::size_t node = 0; node < cfg.r; ++node) {
      const auto& v = samples[node];
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(seeds);
      // per-feature PRF product f = exp(sqrt(2s) w.(q+k) - 2s): E f = e^{2sx},
      // E f^2 = e^{4s + 8sx}; the lognormal tail makes sample variances unreliable
      const double s_r = rule.s[node];
      const double var_f = std::exp(4.0 * s_r + 8.0 * s_r * x) - std::exp(4.0 * s_r * x);
      const double scale = rule.w[node] * x * x;
      const double se = scale * std::sqrt(std::max(0.0, var_f) / static_cast<double>(cfg.d_prf * seeds));
      const double target = scale * std::exp(2.0 * s_r * x);
      const double gap = std::abs(mean - target);
      if (gap > 3.0 * se + 1e-12 * std::abs(target)) {
        ok = false;
        os << "x=" << x << " node " << node << " mean " << mean << " target " << target << " se " << se << "; ";
      }
      if (se > 0.0) worst_z = std::max(worst_z, gap / se);
    }
  }
  os << "worst |z| = " << worst_z;
  return verdict(ok, os);
}

inline CheckResult positivity_guarantee() {
  std::ostringstream os;
  bool ok = true;
  for (PolyKind pk : {PolyKind::exact, PolyKind::anchor}) {
    SlayFeatureConfig c;
    c.poly_kind = pk;
    DenominatorSweepOptions o;
    o.seeds = 1;
    o.dim = 8;
    const auto st = denominator_sweep(c, o);
    ok = ok && st.min_value >= 0.0;
    os << to_string(pk) << " min=" << st.min_value << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult signed_counterexample() {
  std::ostringstream os;
  bool ok = true;
  for (PolyKind pk : {PolyKind::tensorsketch, PolyKind::random_maclaurin}) {
    SlayFeatureConfig c;
    c.poly_kind = pk;
    c.d_p = 64;
    DenominatorSweepOptions o;
    o.seeds = 1;
    o.dim = 16;
    const auto st = denominator_sweep(c, o);
    ok = ok && st.min_value < 0.0;
    os << to_string(pk) << " min=" << st.min_value << " fraction_negative=" << st.fraction_negative << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult shared_randomness_determinism() {
  const auto q = normalize_rows(gaussian(31, 0, 16, 8)).rows;
  const auto k = normalize_rows(gaussian(31, 1, 16, 8)).rows;
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : equivalence_configs()) {
    const auto a = slay_feature_pair(q, k, c);
    const auto b = slay_feature_pair(q, k, c);
    const bool same = a.first.psi == b.first.psi && a.second.psi == b.second.psi;
    if (!same) os << describe(c) << " differs; ";
    ok = ok && same;
  }
  if (ok) os << "identical feature bytes for " << equivalence_configs().size() << " configs";
  return verdict(ok, os);
}

inline CheckResult hadamard_bias() {
  SlayFeatureConfig kron;
  kron.poly_kind = PolyKind::anchor;
  kron.d_prf = 16;
  kron.p_anchors = 16;
  kron.share_omega = true;
  SlayFeatureConfig had = kron;
  had.fusion = FusionKind::hadamard;
  const std::size_t d = 8, pairs = 32, seeds = 256;
  const auto q = unit_rows(37, 0, pairs, d);
  const auto k = unit_rows(37, 1, pairs, d);
  std::vector<std::vector<double>> ks(pairs), hs(pairs);
  for (std::size_t s = 0; s < seeds; ++s) {
    kron.seed = had.seed = 500 + s;
    const auto [kq, kk] = slay_feature_pair(q, k, kron);
    const auto [hq, hk] = slay_feature_pair(q, k, had);
    for (std::size_t i = 0; i < pairs; ++i) {
      ks[i].push_back(dot(kq.psi.row(i), kk.psi.row(i)));
      hs[i].push_back(dot(hq.psi.row(i), hk.psi.row(i)));
    }
  }
  double diff = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double mk = std::accumulate(ks[i].begin(), ks[i].end(), 0.0) / seeds;
    const double mh = std::accumulate(hs[i].begin(), hs[i].end(), 0.0) / seeds;
    double var = 0.0;
    for (double y : ks[i]) var += (y - mk) * (y - mk);
    noise += std::sqrt(var / (seeds - 1) / seeds) / pairs;
    diff += std::abs(mh - mk) / pairs;
  }
  std::ostringstream os;
  os << "mean |hadamard - kronecker| = " << diff << ", noise floor = " << noise;
  return verdict(diff > 10.0 * noise, os);
}

// ---------------------------------------------------------------------------
// linear-attention
// ---------------------------------------------------------------------------

inline CheckResult linear_equivalence() {
  double worst = 0.0;
  std::string where;
  for (const auto& c : equivalence_configs())
    for (std::size_t l : {1u, 2u, 32u, 64u}) {
      const auto q = normalize_rows(gaussian(41, 0, l, 4)).rows;
      const auto k = normalize_rows(gaussian(41, 1, l, 4)).rows;
      const auto v = gaussian(41, 2, l, 3);
      const auto [fq, fk] = slay_feature_pair(q, k, c);
      for (bool causal : {false, true}) {
        const double gap = equivalence_gap(fq.psi, fk.psi, v, c.delta, causal);
        if (gap > worst) worst = gap, where = describe(c) + " L=" + std::to_string(l) + (causal ? " causal" : "");
      }
    }
  std::ostringstream os;
  os << "worst relative gap = " << worst << " (" << where << ")";
  return verdict(worst <= 1e-10, os);
}

inline CheckResult causal_prefix() {
  SlayFeatureConfig c;
  const auto q = normalize_rows(gaussian(43, 0, 64, 8)).rows;
  const auto k = normalize_rows(gaussian(43, 1, 64, 8)).rows;
  const auto v = gaussian(43, 2, 64, 4);
  const auto [fq, fk] = slay_feature_pair(q, k, c);
  const auto full = causal_linear_attention(fq.psi, fk.psi, v, c.delta);
  bool ok = true;
  for (std::size_t p : {1u, 7u, 32u, 63u}) {
    const auto part =
        causal_linear_attention(fq.psi.slice_rows(0, p), fk.psi.slice_rows(0, p), v.slice_rows(0, p), c.delta);
    ok = ok && part.y == full.y.slice_rows(0, p);
  }
  std::ostringstream os;
  os << (ok ? "prefixes bitwise equal" : "prefix mismatch");
  return verdict(ok, os);
}

inline CheckResult positivity_propagation() {
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : equivalence_configs()) {
    if (!c.guarantees_nonneg_scores()) continue;
    const auto q = normalize_rows(gaussian(47, 0, 64, 4)).rows;
    const auto k = normalize_rows(gaussian(47, 1, 64, 4)).rows;
    const auto v = gaussian(47, 2, 64, 3);
    const auto [fq, fk] = slay_feature_pair(q, k, c);
    for (bool causal : {false, true}) {
      const auto out = causal ? causal_linear_attention(fq.psi, fk.psi, v, c.delta)
                              : linear_attention(fq.psi, fk.psi, v, c.delta);
      const double lo = *std::min_element(out.denominators.begin(), out.denominators.end());
      ok = ok && lo >= 0.0 && !out.has_degenerate_rows();
      os << describe(c) << (causal ? " causal" : "") << " min=" << lo << "; ";
    }
  }
  return verdict(ok, os);
}

inline CheckResult linearity_in_v() {
  SlayFeatureConfig c;
  const auto q = normalize_rows(gaussian(53, 0, 48, 8)).rows;
  const auto k = normalize_rows(gaussian(53, 1, 48, 8)).rows;
  const auto v1 = gaussian(53, 2, 48, 4);
  const auto v2 = gaussian(53, 3, 48, 4);
  const double a = 0.75, b = -1.5;
  Matrix<double> mix(48, 4);
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = a * v1.data()[i] + b * v2.data()[i];
  const auto [fq, fk] = slay_feature_pair(q, k, c);
  double gap = 0.0;
  for (bool causal : {false, true}) {
    const auto run = [&](const Matrix<double>& v) {
      return causal ? causal_linear_attention(fq.psi, fk.psi, v, c.delta) : linear_attention(fq.psi, fk.psi, v, c.delta);
    };
    const auto ym = run(mix), y1 = run(v1), y2 = run(v2);
    for (std::size_t i = 0; i < ym.y.data().size(); ++i) {
      const double expect = a * y1.y.data()[i] + b * y2.y.data()[i];
      gap = std::max(gap, std::abs(ym.y.data()[i] - expect) / std::max(1.0, std::abs(expect)));
    }
  }
  std::ostringstream os;
  os << "max pointwise gap = " << gap;
  return verdict(gap <= 1e-12, os);
}

inline CheckResult complexity_contract() {
  const std::size_t d = 32;
  const SlayFeatureConfig cfg;
  std::ostringstream os;
  bool ok = true;
  const std::vector<std::size_t> ls{8192, 16384, 32768};
  const auto rule = make_rule(cfg.r, cfg.kernel_params());
  auto rnd = draw_feature_randomness(cfg, d);
  std::vector<NormalizedSequence<double>> seqs;
  for (std::size_t l : ls)
    seqs.push_back(NormalizedSequence<double>::make(gaussian(59, 0, l, d), gaussian(59, 1, l, d), gaussian(59, 2, l, d)));
  ExactOptions eo;
  eo.row_block = 1024;
  std::vector<std::function<void()>> linear, exact;
  for (const auto& seq : seqs) {
    linear.push_back([&] {
      const auto fq = slay_features(seq.q_hat, cfg, rule, rnd);
      const auto fk = slay_features(seq.k_hat, cfg, rule, rnd);
      (void)linear_attention(fq.psi, fk.psi, seq.v, cfg.delta);
    });
    exact.push_back([&] { (void)exact_attention(seq, ExactKernel::spherical_yat, cfg.kernel_params(), eo); });
  }
  std::vector<double> slay_ms, exact_ms;
  for (const auto& t : time_interleaved(linear, kDefaultTimingReps, kDefaultWarmupReps, 30.0)) slay_ms.push_back(t.median_ms);
  for (const auto& t : time_interleaved(exact, 3, 1, 20.0, 1.0)) exact_ms.push_back(t.median_ms);
  for (std::size_t i = 0; i + 1 < ls.size(); ++i) {
    const double rs = slay_ms[i + 1] / slay_ms[i];
    const double re = exact_ms[i + 1] / exact_ms[i];
    ok = ok && rs <= 2.5 && re >= 3.2;
    os << ls[i] << "->" << ls[i + 1] << ": linear " << rs << ", exact " << re << "; ";
  }
  return verdict(ok, os);
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

inline CheckResult baseline_equivalence() {
  double worst = 0.0;
  std::string where;
  MechanismOptions mo;
  for (Mechanism m : {Mechanism::favor, Mechanism::elu1, Mechanism::cosformer})
    for (std::size_t l : {1u, 2u, 32u, 64u}) {
      const auto q = gaussian(61, 0, l, 8), k = gaussian(61, 1, l, 8), v = gaussian(61, 2, l, 3);
      const auto f = mechanism_features(m, q, k, mo);
      for (bool causal : {false, true}) {
        const double gap = equivalence_gap(f.psi_q, f.psi_k, v, mo.slay.delta, causal);
        if (gap > worst) worst = gap, where = std::string(to_string(m)) + " L=" + std::to_string(l);
      }
    }
  std::ostringstream os;
  os << "worst relative gap = " << worst << " (" << where << ")";
  return verdict(worst <= 1e-10, os);
}

inline CheckResult baseline_nonneg() {
  MechanismOptions mo;
  mo.favor_features = 8;
  bool ok = true;
  std::ostringstream os;
  for (Mechanism m : {Mechanism::favor, Mechanism::elu1}) {
    const auto q = gaussian(67, 0, 64, 4), k = gaussian(67, 1, 64, 4), v = gaussian(67, 2, 64, 3);
    const auto f = mechanism_features(m, q, k, mo);
    for (double x : f.psi_q.data()) ok = ok && x >= 0.0;
    for (double x : f.psi_k.data()) ok = ok && x >= 0.0;
    const auto out = linear_attention(f.psi_q, f.psi_k, v, mo.slay.delta);
    std::size_t excused = 0;
    for (std::size_t i : out.degenerate_rows) {
      const auto row = f.psi_q.row(i);
      const bool zero_row = std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; });
      ok = ok && zero_row;
      excused += zero_row;
    }
    os << to_string(m) << " degenerate=" << out.degenerate_rows.size() << " all-zero=" << excused << "; ";
  }
  return verdict(ok, os);
}

// ---------------------------------------------------------------------------
// analysis
// ---------------------------------------------------------------------------

inline CheckResult fidelity_ordering() {
  AblationOptions o;
  o.skip_timing = true;
  const auto& sc = ablation_scales().back();
  const SlayFeatureConfig base;
  const auto rows = run_poly_ablation({sc}, {"anchor", "nystrom", "tensorsketch", "hadamard"}, base, o);
  const double anchor = rows[0].rel_l2, nys = rows[1].rel_l2, ts = rows[2].rel_l2, had = rows[3].rel_l2;
  std::ostringstream os;
  os << "anchor " << anchor << " nystrom " << nys << " tensorsketch " << ts << " hadamard " << had;
  return verdict(anchor < nys && nys < ts && anchor <= had, os);
}

inline CheckResult denominator_nonneg() {
  std::ostringstream os;
  bool ok = true;
  std::vector<SlayFeatureConfig> configs;
  for (PolyKind pk : {PolyKind::exact, PolyKind::anchor, PolyKind::none}) {
    SlayFeatureConfig c;
    c.poly_kind = pk;
    configs.push_back(c);
  }
  SlayFeatureConfig had;
  had.fusion = FusionKind::hadamard;
  had.p_anchors = had.d_prf;
  configs.push_back(had);
  for (const auto& c : configs) {
    if (!c.guarantees_nonneg_scores()) continue;
    DenominatorSweepOptions o;
    o.dim = 8;
    const auto st = denominator_sweep(c, o);
    ok = ok && st.fraction_negative == 0.0;
    os << describe(c) << " fraction_negative=" << st.fraction_negative << " min=" << st.min_value << "; ";
  }
  return verdict(ok, os);
}

inline CheckResult kernel_curve_bounded() {
  bool ok = true;
  std::ostringstream os;
  for (double eps : {1e-3, 1e-1}) {
    const KernelParams p(eps);
    double top = 0.0;
    for (const auto& row : kernel_curve(p, uniform_grid(10000))) {
      ok = ok && row.spherical_yat >= 0.0 && row.spherical_yat <= 1.0 / eps;
      top = std::max(top, row.spherical_yat);
    }
    os << "eps=" << eps << " max=" << top << "; ";
  }
  return verdict(ok, os);
}

// ---------------------------------------------------------------------------
// bench-cli
// ---------------------------------------------------------------------------

inline CheckResult csv_schemas() {
  const std::vector<std::pair<std::string, std::string>> expected{
      {CsvTable(bench_columns()).str(),
       "mechanism,L,d_model,heads,causal,seed,latency_ms_median,latency_ms_iqr,timed_reps,peak_aux_bytes,"
       "throughput_tokens_per_s,flop_estimate,output_checksum,status\n"},
      {CsvTable(ablation_columns()).str(), "scale,method,L,R,D,P,feature_dim,seeds,rel_l2,cosine,mse,latency_ms\n"},
      {CsvTable(kernel_curve_columns()).str(), "x,spherical_yat,quadrature_estimate,softmax_exp\n"},
      {CsvTable(convergence_columns()).str(), "r,max_abs_error,argmax_x\n"},
      {CsvTable(denominator_columns()).str(), "bin,lower,upper,count,samples,min_value,fraction_negative\n"},
  };
  bool ok = true;
  std::ostringstream os;
  for (const auto& [got, want] : expected)
    if (got != want) ok = false, os << "header drift: " << got;
  if (ok) os << expected.size() << " schemas stable";
  return verdict(ok, os);
}

inline CheckResult bench_scaling() {
  BenchOptions o;
  o.budget_s = 20.0;
  o.slow_run_s = 5.0;
  o.interleave = true;
  std::ostringstream os;
  bool ok = true;
  const auto run = [&](Mechanism m, std::vector<std::size_t> ls) {
    o.mechanisms = {m};
    o.lengths = std::move(ls);
    return run_bench(o);
  };
  const auto lin = run(Mechanism::slay, {8192, 16384, 32768});
  const auto quad = run(Mechanism::spherical_yat, {8192, 16384});
  for (std::size_t i = 0; i + 1 < lin.size(); ++i) {
    const double r = lin[i + 1].latency_ms_median / lin[i].latency_ms_median;
    ok = ok && r <= 2.5;
    os << "slay " << lin[i].length << "->" << lin[i + 1].length << " " << r << "; ";
  }
  const double rq = quad[1].latency_ms_median / quad[0].latency_ms_median;
  ok = ok && quad[1].status == "ok" && rq >= 3.2;
  os << "spherical-yat 8192->16384 " << rq;
  return verdict(ok, os);
}

inline CheckResult registry_coverage();

}  // namespace detail

inline const std::vector<NamedCheck>& registry() {
  using namespace detail;
  static const std::vector<NamedCheck> checks{
      {"tensor-core/normalize-idempotent", "normalizing twice equals normalizing once", normalize_idempotent},
      {"tensor-core/stream-independence", "distinct stream ids give uncorrelated Gaussian draws", stream_independence},
      {"tensor-core/eigh-trace", "eigenvalues sum to the trace", eigh_trace},
      {"exact-kernels/boundedness", "0 <= k(x) <= 1/eps with equality only at x = 1", boundedness},
      {"exact-kernels/rotation-invariance", "Yat kernel is invariant under orthogonal maps", rotation_invariance},
      {"exact-kernels/sign-non-invariance", "k(0.5) differs from k(-0.5)", sign_non_invariance},
      {"exact-kernels/derivative-bound", "max |k'| sits at x = 1 and equals 2(1+eps)/eps^2", derivative_bound},
      {"exact-kernels/oracle-consistency", "spherical-yat equals yat on normalized rows", oracle_consistency},
      {"exact-kernels/chordal-identity", "C - 2x equals 2(1-x) + eps", chordal_identity},
      {"exact-kernels/pd-spot-check", "sphere Gram matrices have no negative eigenvalues", pd_spot},
      {"quadrature/moment-exactness", "rules integrate t^k exactly up to k = 2R-1 and not at 2R", moment_exactness},
      {"quadrature/complete-monotone", "C - 2x >= eps on [-1, 1]", complete_monotone},
      {"quadrature/exponential-convergence", "E(2R) < E(R)/2 for R in {2,4,8} at eps = 0.1", exponential_convergence},
      {"quadrature/weight-concentration", "scaled weights strictly decrease for R <= 6", weight_concentration},
      {"quadrature/positive-weights", "all scaled weights are positive", positive_weights},
      {"feature-maps/prf-positivity", "PRF entries are strictly positive", prf_positivity},
      {"feature-maps/unbiasedness-chain", "fused node scores average to w_r x^2 e^{2 s_r x}", unbiasedness_chain},
      {"feature-maps/positivity-guarantee", "exact and anchor Kronecker scores are never negative", positivity_guarantee},
      {"feature-maps/signed-counterexample", "TensorSketch and Random Maclaurin produce negative scores", signed_counterexample},
      {"feature-maps/shared-randomness-determinism", "identical config and seed give identical features", shared_randomness_determinism},
      {"feature-maps/hadamard-bias", "Hadamard fusion differs systematically from Kronecker", hadamard_bias},
      {"linear-attention/equivalence", "linear contraction matches the explicit Gram oracle", linear_equivalence},
      {"linear-attention/causal-prefix", "causal output on a prefix is bitwise unchanged", causal_prefix},
      {"linear-attention/positivity-propagation", "nonnegative features give nonnegative denominators", positivity_propagation},
      {"linear-attention/linearity-in-v", "output is linear in V", linearity_in_v},
      {"linear-attention/complexity-contract", "linear time ratio <= 2.5, exact ratio >= 3.2 per doubling", complexity_contract},
      {"baselines/equivalence", "baseline features match the explicit Gram oracle", baseline_equivalence},
      {"baselines/nonneg-features", "FAVOR+ and ELU+1 rows degenerate only when all-zero", baseline_nonneg},
      {"analysis/fidelity-ordering", "anchor < nystrom < tensorsketch and anchor <= hadamard", fidelity_ordering},
      {"analysis/denominator-nonneg", "guaranteed configs have no negative denominators", denominator_nonneg},
      {"analysis/kernel-curve-bounded", "kernel curve rows respect 0 <= k <= 1/eps", kernel_curve_bounded},
      {"bench-cli/csv-schemas", "CSV headers match the documented columns", csv_schemas},
      {"bench-cli/selftest-coverage", "every module has named checks with unique names", registry_coverage},
      {"bench-cli/bench-scaling", "bench latency ratios separate linear from quadratic", bench_scaling},
  };
  return checks;
}

inline CheckResult detail::registry_coverage() {
  const auto& checks = registry();
  std::vector<std::string> names;
  for (const auto& c : checks) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  const bool unique = std::adjacent_find(names.begin(), names.end()) == names.end();
  bool covered = true;
  std::ostringstream os;
  for (const char* module : {"tensor-core/", "exact-kernels/", "quadrature/", "feature-maps/", "linear-attention/",
                             "baselines/", "analysis/", "bench-cli/"}) {
    const bool any = std::any_of(names.begin(), names.end(), [&](const std::string& n) { return n.rfind(module, 0) == 0; });
    if (!any) os << "no checks for " << module << "; ";
    covered = covered && any;
  }
  os << checks.size() << " checks, names " << (unique ? "unique" : "duplicated");
  return {unique && covered, os.str()};
}

/// True if name equals filter or lies under it as "<filter>/...".
inline bool matches(const std::string& name, const std::string& filter) {
  return filter.empty() || name == filter || name.rfind(filter + "/", 0) == 0;
}

inline std::vector<Outcome> run(const std::vector<std::string>& filters = {}) {
  std::vector<Outcome> out;
  for (const auto& c : registry()) {
    const bool wanted = filters.empty() || std::any_of(filters.begin(), filters.end(),
                                                       [&](const std::string& f) { return matches(c.name, f); });
    if (!wanted) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{c.name, false, {}, 0.0};
    try {
      const auto r = c.run();
      o.passed = r.passed;
      o.detail = r.detail;
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace slay::selftest
