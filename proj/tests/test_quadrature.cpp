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

#include "oracle.hpp"
#include "slay/analysis.hpp"
#include "slay/quadrature.hpp"

using namespace slay;

TEST(Quadrature, OneNodeRule) {
  const auto r = gauss_laguerre(1);
  EXPECT_NEAR(r.t[0], 1.0, 1e-15);
  EXPECT_NEAR(r.alpha[0], 1.0, 1e-15);
}

TEST(Quadrature, TwoNodeClosedForm) {
  const auto r = gauss_laguerre(2);
  const double s2 = std::sqrt(2.0);
  EXPECT_NEAR(r.t[0], 2.0 - s2, 1e-12);
  EXPECT_NEAR(r.t[1], 2.0 + s2, 1e-12);
  EXPECT_NEAR(r.alpha[0], (2.0 + s2) / 4.0, 1e-12);
  EXPECT_NEAR(r.alpha[1], (2.0 - s2) / 4.0, 1e-12);
}

TEST(Quadrature, MatchesReferenceRules) {
  const auto r3 = gauss_laguerre(3);
  const auto r8 = gauss_laguerre(8);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(r3.t[i], oracle::kLaguerreNodes3[i], 1e-12 * oracle::kLaguerreNodes3[i]);
    EXPECT_NEAR(r3.alpha[i], oracle::kLaguerreWeights3[i], 1e-12 * oracle::kLaguerreWeights3[i]);
  }
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(r8.t[i], oracle::kLaguerreNodes8[i], 1e-12 * oracle::kLaguerreNodes8[i]);
    EXPECT_NEAR(r8.alpha[i], oracle::kLaguerreWeights8[i], 1e-10 * oracle::kLaguerreWeights8[i]);
  }
}

TEST(Quadrature, MomentExactness) {
  for (std::size_t r : {1u, 2u, 4u, 8u}) {
    const auto rule = gauss_laguerre(r);
    for (unsigned k = 0; k <= 2 * r - 1; ++k) {
      long double acc = 0;
      for (std::size_t i = 0; i < r; ++i) acc += rule.alpha[i] * std::pow(static_cast<long double>(rule.t[i]), k);
      const double exact = oracle::factorial(k);
      EXPECT_NEAR(static_cast<double>(acc), exact, 1e-9 * exact) << "R=" << r << " k=" << k;
    }
  }
}

TEST(Quadrature, LargeRulesConverge) {
  for (std::size_t r : {16u, 32u, 48u, 64u}) {
    const auto rule = gauss_laguerre(r);
    double sum = 0.0;
    for (double a : rule.alpha) {
      EXPECT_GT(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 1; i < r; ++i) EXPECT_GT(rule.t[i], rule.t[i - 1]);
  }
}

TEST(Quadrature, RejectsBadNodeCount) {
  EXPECT_THROW((void)gauss_laguerre(0), Error);
  EXPECT_THROW((void)gauss_laguerre(65), Error);
}

TEST(Quadrature, ScaleRuleAtSmallEpsilon) {
  const auto rule = scale_rule(gauss_laguerre(1), 2.0);
  EXPECT_DOUBLE_EQ(rule.s[0], 0.5);
  EXPECT_DOUBLE_EQ(rule.w[0], 0.5);
}

TEST(Quadrature, ScaleRuleTwoNodes) {
  const auto rule = make_rule(2, KernelParams(1e-3));
  EXPECT_NEAR(rule.s[0], 0.585786437626905 / 2.001, 1e-12);
  double sw = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < 2; ++i) sw += rule.w[i], sa += rule.alpha[i];
  EXPECT_NEAR(sw, 1.0 / 2.001, 1e-14);
  EXPECT_NEAR(sa, 1.0, 1e-14);
  EXPECT_THROW((void)scale_rule(gauss_laguerre(2), 0.0), Error);
}

TEST(Quadrature, EstimateAtZeroIsZero) {
  EXPECT_EQ(quadrature_kernel_estimate(0.0, make_rule(8, KernelParams())), 0.0);
}

TEST(Quadrature, EstimateAtOnePinnedAndBelowPeak) {
  // The x = 1 integrand decays like e^{-eps s}; 32 nodes recover only part of 1/eps.
  const double est = quadrature_kernel_estimate(1.0, make_rule(32, KernelParams(1e-3)));
  EXPECT_NEAR(est, 58.21796790934983, 1e-8);
  EXPECT_LT(est, 1000.0);
}

TEST(Quadrature, ErrorDecaysAtNegativeCosine) {
  const KernelParams p(1e-3);
  const double exact = oracle::spherical(-0.5, 1e-3);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t r : {1u, 2u, 4u, 8u}) {
    const double err = std::abs(quadrature_kernel_estimate(-0.5, make_rule(r, p)) - exact);
    EXPECT_LT(err, prev) << "R=" << r;
    prev = err;
  }
  EXPECT_NEAR(quadrature_kernel_estimate(-0.5, make_rule(16, p)), 0.0833055648117294, 1e-12);
}

TEST(Quadrature, NodeTermsArePositiveAndSum) {
  const auto rule = make_rule(5, KernelParams(0.1));
  const auto terms = quadrature_node_terms(0.3, rule);
  double sum = 0.0;
  for (double t : terms) {
    EXPECT_GT(t, 0.0);
    sum += t;
  }
  EXPECT_DOUBLE_EQ(sum, quadrature_kernel_estimate(0.3, rule));
}

TEST(Quadrature, EstimateMatchesDirectSum) {
  const double eps = 0.1;
  const auto rule = make_rule(8, KernelParams(eps));
  for (double x : {-0.9, -0.3, 0.2, 0.7}) {
    long double ref = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      const long double s = oracle::kLaguerreNodes8[i] / (2.0L + eps);
      const long double w = oracle::kLaguerreWeights8[i] / (2.0L + eps);
      ref += w * x * x * std::exp(2.0L * s * x);
    }
    EXPECT_NEAR(quadrature_kernel_estimate(x, rule), static_cast<double>(ref), 1e-12);
  }
}

TEST(Quadrature, PureLaplaceIdentity) {
  const auto rule = make_rule(48, KernelParams(0.1));
  EXPECT_LT(pure_laplace_identity_check(0.0, rule), 1e-12);
  EXPECT_LT(pure_laplace_identity_check(0.9, rule), 1e-3);
  EXPECT_LT(pure_laplace_identity_check(-1.0, rule), 1e-6);
  EXPECT_THROW((void)pure_laplace_identity_check(0.0, make_rule(8, KernelParams(0.1))), Error);
}

TEST(Quadrature, PureLaplaceResidualAtEndpoint) {
  // Same slow endpoint decay as the kernel estimate: the residual at x = 1 is ~1.76e-3.
  const auto rule = make_rule(48, KernelParams(0.1));
  EXPECT_NEAR(pure_laplace_identity_check(1.0, rule), 0.0017590373049571895, 1e-9);
}

TEST(Quadrature, WeightsDecreaseForSmallRules) {
  for (std::size_t r = 2; r <= 6; ++r) {
    const auto rule = make_rule(r, KernelParams());
    for (std::size_t i = 1; i < r; ++i) EXPECT_GT(rule.w[i - 1], rule.w[i]) << "R=" << r;
  }
}

TEST(Quadrature, WeightsPeakAtSecondNodeForSevenNodes) {
  const auto rule = gauss_laguerre(7);
  EXPECT_LT(rule.alpha[0], rule.alpha[1]);
  EXPECT_NEAR(rule.alpha[0], 0.409318951701273, 1e-9);
  EXPECT_NEAR(rule.alpha[1], 0.421831277861720, 1e-9);
}

TEST(Quadrature, ConvergenceSweepValues) {
  const auto rows = quadrature_convergence_sweep(KernelParams(0.1), {1, 2, 4, 8, 16, 32});
  const double expected[] = {8.765774549611956, 7.488465612409502, 5.343976983764015,
                             2.6364412523660103, 0.6152850478919998, 0.03176042095908116};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].max_abs_error, expected[i], 1e-9 * expected[i]) << "R=" << rows[i].r;
    EXPECT_EQ(rows[i].argmax_x, 1.0);
    if (i > 0) {
      EXPECT_LT(rows[i].max_abs_error, rows[i - 1].max_abs_error);
    }
  }
}

TEST(Quadrature, CosineOutsideRangeRejected) {
  EXPECT_THROW((void)quadrature_kernel_estimate(1.5, make_rule(3, KernelParams())), Error);
}
