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


#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <thread>

#include "oracle.hpp"
#include "slay/analysis.hpp"

using namespace slay;

TEST(Analysis, FidelityIdentical) {
  const auto y = oracle::gaussian_matrix(1, 6, 3);
  const auto f = fidelity(y, y);
  EXPECT_EQ(f.rel_l2, 0.0);
  EXPECT_DOUBLE_EQ(f.cosine, 1.0);
  EXPECT_EQ(f.mse, 0.0);
}

TEST(Analysis, FidelityAntipodal) {
  const auto y = oracle::gaussian_matrix(2, 6, 3);
  Matrix<double> neg = y;
  for (double& v : neg.data()) v = -v;
  double meansq = 0.0;
  for (double v : y.data()) meansq += v * v / static_cast<double>(y.size());
  const auto f = fidelity(neg, y);
  EXPECT_DOUBLE_EQ(f.rel_l2, 2.0);
  EXPECT_DOUBLE_EQ(f.cosine, -1.0);
  EXPECT_NEAR(f.mse, 4.0 * meansq, 1e-14);
}

TEST(Analysis, FidelityZeroApproximation) {
  const auto y = oracle::gaussian_matrix(3, 4, 4);
  const auto f = fidelity(Matrix<double>(4, 4), y, 12.5);
  EXPECT_DOUBLE_EQ(f.rel_l2, 1.0);
  EXPECT_EQ(f.cosine, 0.0);
  EXPECT_EQ(f.latency_ms, 12.5);
}

TEST(Analysis, FidelityRejectsZeroReferenceAndShapeMismatch) {
  try {
    (void)fidelity(Matrix<double>(2, 2, 1.0), Matrix<double>(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  EXPECT_THROW((void)fidelity(Matrix<double>(2, 2, 1.0), Matrix<double>(2, 3, 1.0)), Error);
}

TEST(Analysis, FidelityMixedPrecision) {
  const auto y = oracle::gaussian_matrix(4, 5, 5);
  const auto f = fidelity(y.cast<float>(), y);
  EXPECT_LT(f.rel_l2, 1e-7);
  EXPECT_GT(f.cosine, 1.0 - 1e-12);
}

TEST(Analysis, UniformGridEndpoints) {
  const auto g = uniform_grid(201);
  EXPECT_EQ(g.front(), -1.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[100], 0.0);
  EXPECT_THROW((void)uniform_grid(1), Error);
}

TEST(Analysis, KernelCurveRows) {
  const KernelParams p(1e-3);
  const auto rows = kernel_curve(p, {-1.0, 0.0, 0.5, 1.0});
  EXPECT_EQ(rows[3].spherical_yat, 1000.0);
  EXPECT_EQ(rows[1].spherical_yat, 0.0);
  EXPECT_EQ(rows[1].softmax, 1.0);
  EXPECT_EQ(rows[1].quadrature_estimate, 0.0);
  EXPECT_NEAR(rows[0].spherical_yat, 1.0 / 4.001, 1e-15);
  EXPECT_NEAR(rows[2].quadrature_estimate, quadrature_kernel_estimate(0.5, make_rule(3, p)), 0.0);
  EXPECT_THROW((void)kernel_curve(p, {1.5}), Error);
}

TEST(Analysis, KernelCurveMonotoneAndBoundedOnPositiveHalf) {
  const KernelParams p(1e-3);
  const auto rows = kernel_curve(p, uniform_grid(401));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].spherical_yat, 1.0 / p.epsilon());
    if (rows[i - 1].x >= 0.0) {
      EXPECT_GT(rows[i].spherical_yat, rows[i - 1].spherical_yat);
    }
  }
}

TEST(Analysis, ConvergenceMinimalPair) {
  const auto rows = quadrature_convergence_sweep(KernelParams(0.1), {1, 2});
  EXPECT_GT(rows[0].max_abs_error, rows[1].max_abs_error);
  EXPECT_THROW((void)quadrature_convergence_sweep(KernelParams(0.1), {}), Error);
}

TEST(Analysis, DenominatorSweepAnchorIsNonnegative) {
  SlayFeatureConfig cfg;
  DenominatorSweepOptions o;
  o.n_pairs = 2000;
  o.seeds = 2;
  o.dim = 16;
  o.bins = 10;
  const auto st = denominator_sweep(cfg, o);
  EXPECT_EQ(st.samples, 4000u);
  EXPECT_EQ(st.fraction_negative, 0.0);
  EXPECT_GE(st.min_value, 0.0);
  EXPECT_EQ(std::accumulate(st.counts.begin(), st.counts.end(), std::size_t{0}), 4000u);
  EXPECT_EQ(st.bin_edges.size(), 11u);
  EXPECT_EQ(st.bin_edges.front(), st.min_value);
  EXPECT_NEAR(st.bin_edges.back(), st.max_value, 1e-12 * st.max_value);
}

TEST(Analysis, DenominatorSweepExactPolyIsNonnegative) {
  SlayFeatureConfig cfg;
  cfg.poly_kind = PolyKind::exact;
  DenominatorSweepOptions o;
  o.n_pairs = 1000;
  o.seeds = 2;
  o.dim = 8;
  EXPECT_GE(denominator_sweep(cfg, o).min_value, 0.0);
}

TEST(Analysis, DenominatorSweepSignedSketchGoesNegative) {
  SlayFeatureConfig cfg;
  cfg.poly_kind = PolyKind::tensorsketch;
  cfg.d_p = 16;
  DenominatorSweepOptions o;
  o.n_pairs = 2000;
  o.seeds = 2;
  o.dim = 16;
  const auto st = denominator_sweep(cfg, o);
  EXPECT_GT(st.fraction_negative, 0.0);
  EXPECT_LT(st.min_value, 0.0);
}

TEST(Analysis, DenominatorSweepMatchesDirectFeatureProducts) {
  SlayFeatureConfig cfg;
  cfg.seed = 5;
  DenominatorSweepOptions o;
  o.n_pairs = 300;
  o.seeds = 1;
  o.dim = 6;
  o.chunk = 64;
  const auto st = denominator_sweep(cfg, o);
  const auto q = sample_unit_sphere(RngStream::named(5, StreamFamily::inputs, 0), 300, 6);
  const auto k = sample_unit_sphere(RngStream::named(5, StreamFamily::inputs, 1), 300, 6);
  const auto [fq, fk] = slay_feature_pair(q, k, cfg);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 300; ++i) lo = std::min(lo, static_cast<double>(oracle::dot_ld(fq.psi.row(i), fk.psi.row(i))));
  EXPECT_NEAR(st.min_value, lo, 1e-12 * std::abs(lo) + 1e-300);
}

TEST(Analysis, AblationConfigs) {
  const AblationScale sc{"t", 64, 2, 8, 4};
  const SlayFeatureConfig base;
  const auto lap = ablation_config("laplace-only", sc, base);
  EXPECT_EQ(lap.poly_kind, PolyKind::none);
  EXPECT_EQ(lap.d_prf, 32u);
  const auto had = ablation_config("hadamard", sc, base);
  EXPECT_EQ(had.fusion, FusionKind::hadamard);
  EXPECT_EQ(had.p_anchors, 8u);
  EXPECT_TRUE(had.share_omega);
  const auto ts = ablation_config("tensorsketch", sc, base);
  EXPECT_EQ(ts.d_p, 4u);
  EXPECT_EQ(ts.r, 2u);
  EXPECT_THROW((void)ablation_config("bogus", sc, base), Error);
}

TEST(Analysis, AblationRowsAgainstOracle) {
  const AblationScale sc{"tiny", 32, 2, 8, 8};
  SlayFeatureConfig base;
  base.seed = 3;
  AblationOptions o;
  o.seeds = 2;
  o.dim = 8;
  o.skip_timing = true;
  const auto exact = run_ablation_method("exact-spherical", sc, base, o);
  EXPECT_EQ(exact.rel_l2, 0.0);
  EXPECT_EQ(exact.latency_ms, 0.0);
  const auto anchor = run_ablation_method("anchor", sc, base, o);
  EXPECT_EQ(anchor.feature_dim, 2u * 8u * 8u);

  // rebuild the anchor estimate independently
  double rel = 0.0;
  for (std::uint64_t s = 0; s < 2; ++s) {
    const auto in = ablation_inputs(3 + s, 32, 8);
    const auto qn = normalize_rows(in.q).rows, kn = normalize_rows(in.k).rows;
    const auto ref = oracle::kernel_attention(
        [&](std::size_t i, std::size_t j) {
          return static_cast<long double>(oracle::spherical(static_cast<double>(oracle::dot_ld(qn.row(i), kn.row(j))), base.epsilon));
        },
        in.v, base.delta, false);
    SlayFeatureConfig c = ablation_config("anchor", sc, base);
    c.seed = 3 + s;
    const auto [fq, fk] = slay_feature_pair(qn, kn, c);
    const auto approx = oracle::feature_attention(fq.psi, fk.psi, in.v, base.delta, false);
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      num += std::pow(static_cast<long double>(approx.data()[i]) - ref.data()[i], 2);
      den += std::pow(static_cast<long double>(ref.data()[i]), 2);
    }
    rel += static_cast<double>(std::sqrt(num / den)) / 2.0;
  }
  EXPECT_NEAR(anchor.rel_l2, rel, 1e-8 * rel);
}

TEST(Analysis, AblationTableSchema) {
  AblationRow r{"s", "anchor", 128, 2, 8, 8, 128, 5, 0.5, 0.9, 0.01, 1.25};
  const auto t = ablation_table({r}, "{}");
  EXPECT_EQ(t.str(), "# json-config: {}\nscale,method,L,R,D,P,feature_dim,seeds,rel_l2,cosine,mse,latency_ms\n"
                     "s,anchor,128,2,8,8,128,5,0.5,0.9,0.01,1.25\n");
}

TEST(Analysis, TimeMedianCountsRuns) {
  int calls = 0;
  const auto t = time_median([&] { ++calls; }, 7, 3);
  EXPECT_EQ(calls, 10);
  EXPECT_EQ(t.reps, 7u);
  EXPECT_GE(t.median_ms, 0.0);
  EXPECT_GE(t.iqr_ms, 0.0);
}

TEST(Analysis, TimeMedianBudgetStopsEarly) {
  int calls = 0;
  const auto t = time_median([&] { ++calls; }, 50, 0, 0.0);
  EXPECT_EQ(t.reps, 1u);
  EXPECT_EQ(calls, 1);
}

TEST(Analysis, TimeInterleavedAlternatesFunctions) {
  std::string order;
  const auto t = time_interleaved({[&] { order += 'a'; }, [&] { order += 'b'; }}, 3, 1);
  EXPECT_EQ(order, "abababab");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].reps, 3u);
  EXPECT_EQ(t[1].reps, 3u);
}

TEST(Analysis, TimeInterleavedBudgetIsPerFunction) {
  int fast = 0, slow = 0;
  const auto t = time_interleaved(
      {[&] { ++fast; },
       [&] {
         ++slow;
         std::this_thread::sleep_for(std::chrono::milliseconds(30));
       }},
      5, 0, 0.02);
  EXPECT_EQ(slow, 1);
  EXPECT_EQ(fast, 5);
  EXPECT_EQ(t[0].reps, 5u);
  EXPECT_EQ(t[1].reps, 1u);
}

TEST(Analysis, SortedQuantile) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
}

TEST(Analysis, CsvTableChecksWidth) {
  CsvTable t({"a", "b"});
  t.add({std::string("x"), 1.5});
  EXPECT_THROW(t.add({1.0}), Error);
  EXPECT_EQ(t.str(), "a,b\nx,1.5\n");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333333");
}
