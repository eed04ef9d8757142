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
#include <limits>
#include <string>
#include <vector>

#include "slay/csv.hpp"
#include "slay/exact_attention.hpp"
#include "slay/features.hpp"
#include "slay/linear_attention.hpp"
#include "slay/quadrature.hpp"

namespace slay {

// ---------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------

struct FidelityReport {
  double rel_l2 = 0.0;
  double cosine = 0.0;
  double mse = 0.0;
  double latency_ms = 0.0;
  std::string mechanism;
  std::string config_json;
};

/// Error metrics of y_approx against y_exact, accumulated in f64.
template <typename T, typename U>
FidelityReport fidelity(const Matrix<T>& y_approx, const Matrix<U>& y_exact, double latency_ms = 0.0) {
  require(y_approx.rows() == y_exact.rows() && y_approx.cols() == y_exact.cols(), ErrorKind::usage,
          "fidelity: shape mismatch");
  require(y_exact.rows() * y_exact.cols() >= 1, ErrorKind::usage, "fidelity: empty matrices");
  double diff2 = 0.0;
  double exact2 = 0.0;
  double approx2 = 0.0;
  double cross = 0.0;
  auto a = y_approx.data();
  auto e = y_exact.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(e[i]);
    diff2 += (x - y) * (x - y);
    exact2 += y * y;
    approx2 += x * x;
    cross += x * y;
  }
  require(exact2 > 0.0, ErrorKind::numeric, "fidelity: reference output has zero norm");
  FidelityReport r;
  r.rel_l2 = std::sqrt(diff2) / std::sqrt(exact2);
  r.cosine = approx2 > 0.0 ? std::clamp(cross / std::sqrt(exact2 * approx2), -1.0, 1.0) : 0.0;
  r.mse = diff2 / static_cast<double>(a.size());
  r.latency_ms = latency_ms;
  return r;
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

struct TimingStats {
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  std::size_t reps = 0;
};

inline constexpr std::size_t kDefaultTimingReps = 20;
inline constexpr std::size_t kDefaultWarmupReps = 5;

/// Linear-interpolated quantile of sorted values.
inline double sorted_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Median and interquartile range of raw per-run milliseconds.
inline TimingStats timing_stats(std::vector<double> ms) {
  std::sort(ms.begin(), ms.end());
  return {sorted_quantile(ms, 0.5), sorted_quantile(ms, 0.75) - sorted_quantile(ms, 0.25), ms.size()};
}

/// Wall-clock median and IQR of fn over reps timed runs after warmup runs.
/// A run slower than slow_run_s stops the warmup early, and timed runs stop
/// once budget_s has elapsed (always at least one).
inline TimingStats time_median(const std::function<void()>& fn, std::size_t reps = kDefaultTimingReps,
                               std::size_t warmup = kDefaultWarmupReps,
                               double budget_s = std::numeric_limits<double>::infinity(),
                               double slow_run_s = std::numeric_limits<double>::infinity()) {
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };
  for (std::size_t i = 0; i < warmup; ++i) {
    const auto t0 = clock::now();
    fn();
    if (seconds(clock::now() - t0) > slow_run_s) break;
  }
  std::vector<double> ms;
  const auto start = clock::now();
  for (std::size_t i = 0; i < std::max<std::size_t>(reps, 1); ++i) {
    const auto t0 = clock::now();
    fn();
    ms.push_back(1e3 * seconds(clock::now() - t0));
    if (seconds(clock::now() - start) > budget_s) break;
  }
  return timing_stats(std::move(ms));
}

/// time_median for several functions at once: after each function's warmup,
/// rounds time one run of every function whose own timed total is still
/// within budget_s. Slow drift in machine speed then affects all functions
/// alike, which keeps their latency ratios stable.
inline std::vector<TimingStats> time_interleaved(const std::vector<std::function<void()>>& fns,
                                                 std::size_t reps = kDefaultTimingReps,
                                                 std::size_t warmup = kDefaultWarmupReps,
                                                 double budget_s = std::numeric_limits<double>::infinity(),
                                                 double slow_run_s = std::numeric_limits<double>::infinity()) {
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };
  for (const auto& fn : fns) {
    for (std::size_t i = 0; i < warmup; ++i) {
      const auto t0 = clock::now();
      fn();
      if (seconds(clock::now() - t0) > slow_run_s) break;
    }
  }
  std::vector<std::vector<double>> ms(fns.size());
  std::vector<double> spent(fns.size(), 0.0);
  for (std::size_t round = 0; round < std::max<std::size_t>(reps, 1); ++round) {
    bool any = false;
    for (std::size_t i = 0; i < fns.size(); ++i) {
      if (round > 0 && spent[i] > budget_s) continue;
      const auto t0 = clock::now();
      fns[i]();
      const double s = seconds(clock::now() - t0);
      ms[i].push_back(1e3 * s);
      spent[i] += s;
      any = true;
    }
    if (!any) break;
  }
  std::vector<TimingStats> out;
  for (auto& m : ms) out.push_back(timing_stats(std::move(m)));
  return out;
}

// ---------------------------------------------------------------------------
// Denominator stability
// ---------------------------------------------------------------------------

struct DenominatorStats {
  double min_value = 0.0;
  double max_value = 0.0;
  double fraction_negative = 0.0;
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t samples = 0;
};

struct DenominatorSweepOptions {
  std::size_t n_pairs = 100000;
  std::size_t seeds = 8;
  std::size_t dim = 32;
  std::size_t bins = 32;
  std::size_t chunk = 256;
};

/// Random unit (q, k) pairs, one key per query row, mapped with cfg; records
/// the pre-stabilizer score psi(q)^T psi(k) of every pair. Seed s uses
/// cfg.seed + s for both the inputs and the feature randomness.
inline DenominatorStats denominator_sweep(const SlayFeatureConfig& cfg,
                                          const DenominatorSweepOptions& opt = {}) {
  require(opt.n_pairs >= 1, ErrorKind::usage, "denominator_sweep: n_pairs must be >= 1");
  require(opt.seeds >= 1, ErrorKind::usage, "denominator_sweep: seeds must be >= 1");
  require(opt.bins >= 1 && opt.chunk >= 1, ErrorKind::usage, "denominator_sweep: bins and chunk must be >= 1");
  const QuadratureRule rule = make_rule(cfg.r, cfg.kernel_params());

  std::vector<double> values;
  values.reserve(opt.n_pairs * opt.seeds);
  for (std::size_t s = 0; s < opt.seeds; ++s) {
    SlayFeatureConfig c = cfg;
    c.seed = cfg.seed + s;
    FeatureRandomness rnd = draw_feature_randomness(c, opt.dim);
    const auto q_all = sample_unit_sphere(RngStream::named(c.seed, StreamFamily::inputs, 0), opt.n_pairs, opt.dim);
    const auto k_all = sample_unit_sphere(RngStream::named(c.seed, StreamFamily::inputs, 1), opt.n_pairs, opt.dim);
    for (std::size_t first = 0; first < opt.n_pairs; first += opt.chunk) {
      const std::size_t last = std::min(opt.n_pairs, first + opt.chunk);
      const auto q = q_all.slice_rows(first, last - first);
      const auto k = k_all.slice_rows(first, last - first);
      if (c.fusion == FusionKind::kronecker && c.poly_kind != PolyKind::none) {
        // <a (x) b, c (x) d> = <a, c><b, d>: same scores without the product features.
        const auto pq = polynomial_factor(q, c, rnd);
        const auto pk = polynomial_factor(k, c, rnd);
        std::vector<double> acc(last - first, 0.0);
        for (std::size_t node = 0; node < c.r; ++node) {
          const auto fq = prf_features(q, rule.s[node], rnd.omega_for(node));
          const auto fk = prf_features(k, rule.s[node], rnd.omega_for(node));
          for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += rule.w[node] * dot(pq.row(i), pk.row(i)) * dot(fq.row(i), fk.row(i));
        }
        values.insert(values.end(), acc.begin(), acc.end());
      } else {
        const auto fq = slay_features(q, c, rule, rnd);
        const auto fk = slay_features(k, c, rule, rnd);
        for (std::size_t i = 0; i < last - first; ++i) values.push_back(dot(fq.psi.row(i), fk.psi.row(i)));
      }
    }
  }

  DenominatorStats st;
  st.samples = values.size();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  st.min_value = *lo;
  st.max_value = *hi;
  st.fraction_negative =
      static_cast<double>(std::count_if(values.begin(), values.end(), [](double v) { return v < 0.0; })) /
      static_cast<double>(values.size());
  const double width = st.max_value > st.min_value ? (st.max_value - st.min_value) / static_cast<double>(opt.bins) : 1.0;
  st.bin_edges.resize(opt.bins + 1);
  for (std::size_t b = 0; b <= opt.bins; ++b) st.bin_edges[b] = st.min_value + width * static_cast<double>(b);
  st.counts.assign(opt.bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - st.min_value) / width);
    ++st.counts[std::min(b, opt.bins - 1)];
  }
  return st;
}

inline const std::vector<std::string>& denominator_columns() {
  static const std::vector<std::string> c{"bin", "lower", "upper", "count", "samples", "min_value",
                                          "fraction_negative"};
  return c;
}

inline CsvTable denominator_table(const DenominatorStats& st, std::string json_config) {
  CsvTable t(denominator_columns(), std::move(json_config));
  for (std::size_t b = 0; b < st.counts.size(); ++b)
    t.add({static_cast<long long>(b), st.bin_edges[b], st.bin_edges[b + 1],
           static_cast<long long>(st.counts[b]), static_cast<long long>(st.samples), st.min_value,
           st.fraction_negative});
  return t;
}

// ---------------------------------------------------------------------------
// Kernel curves and quadrature convergence
// ---------------------------------------------------------------------------

/// n evenly spaced points covering [-1, 1], endpoints included.
inline std::vector<double> uniform_grid(std::size_t n) {
  require(n >= 2, ErrorKind::usage, "uniform_grid: need at least two points");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = 1.0;
  return g;
}

struct KernelCurveRow {
  double x;
  double spherical_yat;
  double quadrature_estimate;
  double softmax;
};

inline std::vector<KernelCurveRow> kernel_curve(const KernelParams& p, const std::vector<double>& grid,
                                                std::size_t r = kDefaultQuadratureNodes) {
  const QuadratureRule rule = make_rule(r, p);
  std::vector<KernelCurveRow> rows;
  rows.reserve(grid.size());
  for (double x : grid) {
    require(x >= -1.0 && x <= 1.0, ErrorKind::usage, "kernel_curve: grid point outside [-1, 1]");
    rows.push_back({x, spherical_yat_scalar(x, p), quadrature_kernel_estimate(x, rule), std::exp(x)});
  }
  return rows;
}

inline const std::vector<std::string>& kernel_curve_columns() {
  static const std::vector<std::string> c{"x", "spherical_yat", "quadrature_estimate", "softmax_exp"};
  return c;
}

inline CsvTable kernel_curve_table(const std::vector<KernelCurveRow>& rows, std::string json_config) {
  CsvTable t(kernel_curve_columns(), std::move(json_config));
  for (const auto& r : rows) t.add({r.x, r.spherical_yat, r.quadrature_estimate, r.softmax});
  return t;
}

inline constexpr std::size_t kConvergenceGridPoints = 201;

struct ConvergenceRow {
  std::size_t r;
  double max_abs_error;
  double argmax_x;
};

inline std::vector<ConvergenceRow> quadrature_convergence_sweep(const KernelParams& p,
                                                                const std::vector<std::size_t>& r_values,
                                                                std::size_t grid_points = kConvergenceGridPoints) {
  require(!r_values.empty(), ErrorKind::usage, "quadrature_convergence_sweep: r_values is empty");
  const auto grid = uniform_grid(grid_points);
  std::vector<ConvergenceRow> rows;
  for (std::size_t r : r_values) {
    const QuadratureRule rule = make_rule(r, p);
    ConvergenceRow row{r, 0.0, grid.front()};
    for (double x : grid) {
      const double e = std::abs(quadrature_kernel_estimate(x, rule) - spherical_yat_scalar(x, p));
      if (e > row.max_abs_error) row = {r, e, x};
    }
    rows.push_back(row);
  }
  return rows;
}

inline const std::vector<std::string>& convergence_columns() {
  static const std::vector<std::string> c{"r", "max_abs_error", "argmax_x"};
  return c;
}

inline CsvTable convergence_table(const std::vector<ConvergenceRow>& rows, std::string json_config) {
  CsvTable t(convergence_columns(), std::move(json_config));
  for (const auto& r : rows) t.add({static_cast<long long>(r.r), r.max_abs_error, r.argmax_x});
  return t;
}

// ---------------------------------------------------------------------------
// Polynomial-factor ablation
// ---------------------------------------------------------------------------

struct AblationScale {
  std::string name;
  std::size_t length;
  std::size_t r;
  std::size_t d_prf;
  std::size_t p;
};

inline const std::vector<AblationScale>& ablation_scales() {
  static const std::vector<AblationScale> s{{"small", 128, 2, 8, 8},
                                            {"medium", 256, 2, 16, 16},
                                            {"large", 512, 2, 32, 32},
                                            {"paper-default", 256, 3, 16, 8}};
  return s;
}

inline const std::vector<std::string>& ablation_methods() {
  static const std::vector<std::string> m{"exact-spherical", "laplace-only", "anchor", "hadamard",
                                          "nystrom", "tensorsketch", "random-maclaurin"};
  return m;
}

/// Feature config of one ablation method at one budget. Signed sketches use
/// D_p = P so every method spends the same polynomial budget; laplace-only
/// spends it on extra PRF features and hadamard ties P to D with a shared omega.
inline SlayFeatureConfig ablation_config(const std::string& method, const AblationScale& sc,
                                         const SlayFeatureConfig& base) {
  SlayFeatureConfig c = base;
  c.r = sc.r;
  c.d_prf = sc.d_prf;
  c.p_anchors = sc.p;
  c.d_p = sc.p;
  c.fusion = FusionKind::kronecker;
  if (method == "laplace-only") {
    c.poly_kind = PolyKind::none;
    c.d_prf = sc.d_prf * sc.p;
  } else if (method == "anchor") {
    c.poly_kind = PolyKind::anchor;
  } else if (method == "hadamard") {
    c.poly_kind = PolyKind::anchor;
    c.p_anchors = sc.d_prf;
    c.fusion = FusionKind::hadamard;
    c.share_omega = true;
  } else if (method == "nystrom") {
    c.poly_kind = PolyKind::nystrom;
  } else if (method == "tensorsketch") {
    c.poly_kind = PolyKind::tensorsketch;
  } else if (method == "random-maclaurin") {
    c.poly_kind = PolyKind::random_maclaurin;
  } else {
    fail(ErrorKind::usage, "ablation_config: unknown method " + method);
  }
  return c;
}

struct AblationInputs {
  Matrix<double> q;
  Matrix<double> k;
  Matrix<double> v;
};

/// Independent standard-Gaussian Q, K, V rows for one seed.
inline AblationInputs ablation_inputs(std::uint64_t seed, std::size_t length, std::size_t dim) {
  return {sample_gaussian(RngStream::named(seed, StreamFamily::inputs, 0), length, dim),
          sample_gaussian(RngStream::named(seed, StreamFamily::inputs, 1), length, dim),
          sample_gaussian(RngStream::named(seed, StreamFamily::inputs, 2), length, dim)};
}

struct AblationRow {
  std::string scale;
  std::string method;
  std::size_t length = 0;
  std::size_t r = 0;
  std::size_t d_prf = 0;
  std::size_t p = 0;
  std::size_t feature_dim = 0;
  std::size_t seeds = 0;
  double rel_l2 = 0.0;
  double cosine = 0.0;
  double mse = 0.0;
  double latency_ms = 0.0;
};

struct AblationOptions {
  std::size_t seeds = 5;
  std::size_t dim = 32;
  bool causal = false;
  std::size_t reps = kDefaultTimingReps;
  std::size_t warmup = kDefaultWarmupReps;
  /// Skip timing and report zero latency.
  bool skip_timing = false;
};

/// Mean fidelity of one method against exact spherical attention over seeds
/// base.seed, base.seed + 1, ... Latency is the median forward time of the
/// first seed, excluding randomness setup.
inline AblationRow run_ablation_method(const std::string& method, const AblationScale& sc,
                                       const SlayFeatureConfig& base, const AblationOptions& opt) {
  require(opt.seeds >= 1, ErrorKind::usage, "ablation: seeds must be >= 1");
  AblationRow row{sc.name, method, sc.length, sc.r, sc.d_prf, sc.p, 0, opt.seeds};
  const bool exact = method == "exact-spherical";
  const SlayFeatureConfig cfg = exact ? base : ablation_config(method, sc, base);
  row.feature_dim = exact ? 0 : cfg.feature_dim(opt.dim);
  ExactOptions eo;
  eo.causal = opt.causal;
  eo.delta = base.delta;

  for (std::size_t s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = base.seed + s;
    const auto in = ablation_inputs(seed, sc.length, opt.dim);
    const auto seq = NormalizedSequence<double>::make(in.q, in.k, in.v);
    const auto ref = exact_attention(seq, ExactKernel::spherical_yat, base.kernel_params(), eo);

    std::function<AttentionOutput<double>()> forward;
    SlayFeatureConfig c = cfg;
    c.seed = seed;
    std::optional<FeatureRandomness> rnd;
    const QuadratureRule rule = make_rule(c.r, c.kernel_params());
    if (exact) {
      forward = [&] { return exact_attention(seq, ExactKernel::spherical_yat, base.kernel_params(), eo); };
    } else {
      rnd.emplace(draw_feature_randomness(c, opt.dim));
      forward = [&] {
        const auto fq = slay_features(seq.q_hat, c, rule, *rnd);
        const auto fk = slay_features(seq.k_hat, c, rule, *rnd);
        return opt.causal ? causal_linear_attention(fq.psi, fk.psi, seq.v, c.delta)
                          : linear_attention(fq.psi, fk.psi, seq.v, c.delta);
      };
    }
    const auto out = forward();
    const auto f = fidelity(out.y, ref.y);
    row.rel_l2 += f.rel_l2 / static_cast<double>(opt.seeds);
    row.cosine += f.cosine / static_cast<double>(opt.seeds);
    row.mse += f.mse / static_cast<double>(opt.seeds);
    if (s == 0 && !opt.skip_timing)
      row.latency_ms = time_median([&] { (void)forward(); }, opt.reps, opt.warmup).median_ms;
  }
  return row;
}

inline std::vector<AblationRow> run_poly_ablation(const std::vector<AblationScale>& scales,
                                                  const std::vector<std::string>& methods,
                                                  const SlayFeatureConfig& base,
                                                  const AblationOptions& opt) {
  std::vector<AblationRow> rows;
  for (const auto& sc : scales)
    for (const auto& m : methods) rows.push_back(run_ablation_method(m, sc, base, opt));
  return rows;
}

inline const std::vector<std::string>& ablation_columns() {
  static const std::vector<std::string> c{"scale",  "method", "L",      "R",   "D",         "P",
                                          "feature_dim", "seeds", "rel_l2", "cosine", "mse", "latency_ms"};
  return c;
}

inline CsvTable ablation_table(const std::vector<AblationRow>& rows, std::string json_config) {
  CsvTable t(ablation_columns(), std::move(json_config));
  for (const auto& r : rows)
    t.add({r.scale, r.method, static_cast<long long>(r.length), static_cast<long long>(r.r),
           static_cast<long long>(r.d_prf), static_cast<long long>(r.p),
           static_cast<long long>(r.feature_dim), static_cast<long long>(r.seeds), r.rel_l2, r.cosine,
           r.mse, r.latency_ms});
  return t;
}

}  // namespace slay
