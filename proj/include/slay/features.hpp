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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slay/feature_config.hpp"
#include "slay/linalg.hpp"
#include "slay/quadrature.hpp"
#include "slay/rng.hpp"
#include "slay/sketch.hpp"

namespace slay {

inline constexpr double kUnitNormTolerance = 1e-4;

// ---------------------------------------------------------------------------
// Exponential factor
// ---------------------------------------------------------------------------

/// Positive random features for e^{2 s q.k}:
///   phi_i(u) = exp(sqrt(2s) w_i.u - s) / sqrt(D),  w_i ~ N(0, I).
/// Unbiasedness relies on ||u|| = 1, so rows off the sphere are rejected.
template <typename T>
Matrix<T> prf_features(const Matrix<T>& u_hat, double s, const Matrix<double>& omega) {
  require(s >= 0.0, ErrorKind::usage, "prf_features: node value must be nonnegative");
  require(omega.cols() == u_hat.cols(), ErrorKind::usage, "prf_features: omega width mismatch");
  for (std::size_t i = 0; i < u_hat.rows(); ++i) {
    const double n = std::sqrt(static_cast<double>(dot(u_hat.row(i), u_hat.row(i))));
    if (std::abs(n - 1.0) > kUnitNormTolerance)
      fail(ErrorKind::numeric, "prf_features: row " + std::to_string(i) + " is not unit norm");
  }
  const std::size_t features = omega.rows();
  const double root = std::sqrt(2.0 * s);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(features));
  Matrix<T> proj = matmul_transposed(u_hat, omega.cast<T>());
  for (T& v : proj.data())
    v = static_cast<T>(std::exp(root * static_cast<double>(v) - s) * inv_sqrt_d);
  return proj;
}

// ---------------------------------------------------------------------------
// Polynomial factor (x.y)^2
// ---------------------------------------------------------------------------

/// vec(u u^T), a-major: column a*d + b holds u_a u_b.
template <typename T>
Matrix<T> poly_exact(const Matrix<T>& u, std::size_t cap = kExactPolyCap) {
  const std::size_t d = u.cols();
  require(d * d <= cap, ErrorKind::config,
          "poly_exact: d^2 = " + std::to_string(d * d) + " exceeds cap " + std::to_string(cap));
  Matrix<T> out(u.rows(), d * d);
  for (std::size_t l = 0; l < u.rows(); ++l) {
    auto x = u.row(l);
    auto o = out.row(l);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) o[a * d + b] = x[a] * x[b];
  }
  return out;
}

/// (x.a_i)^2 / sqrt(P). Nonnegative entries, so induced inner products are too.
template <typename T>
Matrix<T> poly_anchor(const Matrix<T>& u, const Matrix<double>& anchors) {
  require(anchors.rows() >= 1, ErrorKind::usage, "poly_anchor: need at least one anchor");
  require(anchors.cols() == u.cols(), ErrorKind::usage, "poly_anchor: anchor width mismatch");
  Matrix<T> out = matmul_transposed(u, anchors.cast<T>());
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(anchors.rows())));
  for (T& v : out.data()) v = v * v * scale;
  return out;
}

/// (r_i.x)(s_i.x) / sqrt(D_p) with Rademacher r_i, s_i. Unbiased, signed.
template <typename T>
Matrix<T> poly_random_maclaurin(const Matrix<T>& u, const Matrix<double>& rademacher_r,
                                const Matrix<double>& rademacher_s) {
  require(rademacher_r.rows() == rademacher_s.rows() && rademacher_r.cols() == u.cols() &&
              rademacher_s.cols() == u.cols(),
          ErrorKind::usage, "poly_random_maclaurin: projection shape mismatch");
  for (double v : rademacher_r.data())
    require(v == 1.0 || v == -1.0, ErrorKind::usage, "poly_random_maclaurin: entries must be +-1");
  for (double v : rademacher_s.data())
    require(v == 1.0 || v == -1.0, ErrorKind::usage, "poly_random_maclaurin: entries must be +-1");
  Matrix<T> pr = matmul_transposed(u, rademacher_r.cast<T>());
  const Matrix<T> ps = matmul_transposed(u, rademacher_s.cast<T>());
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rademacher_r.rows())));
  auto a = pr.data();
  auto b = ps.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] * b[i] * scale;
  return pr;
}

/// Degree-2 TensorSketch of each row: circular convolution of two count sketches.
template <typename T>
Matrix<T> poly_tensorsketch(const Matrix<T>& u, TensorSketch2& sketch) {
  require(sketch.dim_a() == u.cols() && sketch.dim_b() == u.cols(), ErrorKind::usage,
          "poly_tensorsketch: hash tables do not match the input width");
  Matrix<T> out(u.rows(), sketch.width());
  for (std::size_t l = 0; l < u.rows(); ++l) sketch.apply(u.row(l), u.row(l), out.row(l));
  return out;
}

/// (K_AA + lambda I)^{-1/2} for the squared-dot-product kernel on anchors.
struct NystromWhitening {
  Matrix<double> map;
  double min_eig_before_ridge = 0.0;
  std::optional<std::string> diagnostic;
};

inline NystromWhitening nystrom_whitening(const Matrix<double>& anchors, double lambda) {
  const std::size_t p = anchors.rows();
  require(p >= 1, ErrorKind::usage, "nystrom: need at least one anchor");
  require(lambda >= 0.0, ErrorKind::config, "nystrom: lambda must be nonnegative");
  Matrix<double> gram(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double x = dot(anchors.row(i), anchors.row(j));
      gram(i, j) = x * x;
    }
  const auto eig = symmetric_eigh(gram);
  NystromWhitening out;
  out.min_eig_before_ridge = eig.values.front();
  if (out.min_eig_before_ridge < 1e-10)
    out.diagnostic = "nystrom: ill-conditioned anchor Gram (min eigenvalue " +
                     std::to_string(out.min_eig_before_ridge) + " before ridge)";
  if (!(out.min_eig_before_ridge + lambda > 0.0))
    fail(ErrorKind::numeric, "nystrom: K_AA + lambda I is not positive definite");
  out.map = spectral_function(eig, [lambda](double ev) { return 1.0 / std::sqrt(ev + lambda); });
  return out;
}

/// K_xA (K_AA + lambda I)^{-1/2} with a precomputed whitening map.
template <typename T>
Matrix<T> poly_nystrom(const Matrix<T>& u, const Matrix<double>& anchors,
                       const NystromWhitening& whitening) {
  require(anchors.cols() == u.cols(), ErrorKind::usage, "poly_nystrom: anchor width mismatch");
  Matrix<T> k_xa = matmul_transposed(u, anchors.cast<T>());
  for (T& v : k_xa.data()) v = v * v;
  return matmul(k_xa, whitening.map.cast<T>());
}

template <typename T>
Matrix<T> poly_nystrom(const Matrix<T>& u, const Matrix<double>& anchors, double lambda) {
  return poly_nystrom(u, anchors, nystrom_whitening(anchors, lambda));
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

/// Output width of fuse_node for the given factor widths.
inline std::size_t fused_width(FusionKind fusion, std::size_t dp, std::size_t dr, const TensorSketch2* sketch) {
  switch (fusion) {
    case FusionKind::kronecker: return dp * dr;
    case FusionKind::hadamard: return dp;
    case FusionKind::sketch: return sketch ? sketch->width() : 0;
  }
  return 0;
}

/// fuse_node written into columns [col, col + width) of out.
template <typename T>
void fuse_node_into(const Matrix<T>& phi_poly, const Matrix<T>& phi_prf, double weight, FusionKind fusion,
                    TensorSketch2* sketch, Matrix<T>& out, std::size_t col) {
  require(weight > 0.0, ErrorKind::usage, "fuse_node: weight must be positive");
  require(phi_poly.rows() == phi_prf.rows(), ErrorKind::usage, "fuse_node: row count mismatch");
  const std::size_t n = phi_poly.rows();
  const std::size_t dp = phi_poly.cols();
  const std::size_t dr = phi_prf.cols();
  if (fusion == FusionKind::hadamard)
    require(dp == dr, ErrorKind::config, "fuse_node: hadamard fusion needs equal widths");
  if (fusion == FusionKind::sketch) {
    require(sketch != nullptr, ErrorKind::usage, "fuse_node: sketch fusion needs a sketch");
    require(sketch->dim_a() == dp && sketch->dim_b() == dr, ErrorKind::usage,
            "fuse_node: sketch hash tables do not match factor widths");
  }
  require(out.rows() == n && col + fused_width(fusion, dp, dr, sketch) <= out.cols(), ErrorKind::usage,
          "fuse_node: destination too small");
  const T root_w = static_cast<T>(std::sqrt(weight));
  for (std::size_t l = 0; l < n; ++l) {
    auto poly = phi_poly.row(l);
    auto prf = phi_prf.row(l);
    auto o = out.row(l).subspan(col);
    switch (fusion) {
      case FusionKind::kronecker:
        for (std::size_t a = 0; a < dp; ++a) {
          const T pa = root_w * poly[a];
          for (std::size_t b = 0; b < dr; ++b) o[a * dr + b] = pa * prf[b];
        }
        break;
      case FusionKind::hadamard:
        for (std::size_t i = 0; i < dp; ++i) o[i] = root_w * poly[i] * prf[i];
        break;
      case FusionKind::sketch:
        sketch->apply(poly, prf, o.first(sketch->width()), std::sqrt(weight));
        break;
    }
  }
}

/// Combines the polynomial and exponential factors of one quadrature node,
/// scaled by sqrt(weight). Kronecker columns are a-major: poly index a,
/// PRF index b lands at a * D + b. `sketch` is required for FusionKind::sketch.
template <typename T>
Matrix<T> fuse_node(const Matrix<T>& phi_poly, const Matrix<T>& phi_prf, double weight,
                    FusionKind fusion, TensorSketch2* sketch = nullptr) {
  if (fusion == FusionKind::sketch)
    require(sketch != nullptr, ErrorKind::usage, "fuse_node: sketch fusion needs a sketch");
  Matrix<T> out(phi_poly.rows(), fused_width(fusion, phi_poly.cols(), phi_prf.cols(), sketch));
  fuse_node_into(phi_poly, phi_prf, weight, fusion, sketch, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Full SLAY map
// ---------------------------------------------------------------------------

/// All random draws behind one SLAY feature map. Drawn once and shared by the
/// query and key calls.
struct FeatureRandomness {
  std::size_t dim = 0;
  std::vector<Matrix<double>> omega;  // one D x d block per node (one if shared)
  Matrix<double> anchors;             // P x d, anchor and nystrom
  std::optional<NystromWhitening> nystrom;
  Matrix<double> rademacher_r;  // D_p x d
  Matrix<double> rademacher_s;
  std::optional<TensorSketch2> poly_sketch;
  std::vector<TensorSketch2> fusion_sketch;  // one per node

  const Matrix<double>& omega_for(std::size_t node) const {
    return omega.size() == 1 ? omega.front() : omega.at(node);
  }
};

inline FeatureRandomness draw_feature_randomness(const SlayFeatureConfig& cfg, std::size_t dim) {
  cfg.validate(dim);
  require(dim >= 1, ErrorKind::usage, "draw_feature_randomness: input width must be >= 1");
  FeatureRandomness rnd;
  rnd.dim = dim;
  const std::size_t omega_blocks = cfg.share_omega ? 1 : cfg.r;
  for (std::size_t node = 0; node < omega_blocks; ++node)
    rnd.omega.push_back(sample_gaussian(
        RngStream::named(cfg.seed, StreamFamily::prf_omega, static_cast<std::uint32_t>(node)),
        cfg.d_prf, dim));

  switch (cfg.poly_kind) {
    case PolyKind::anchor:
    case PolyKind::nystrom:
      rnd.anchors = sample_unit_sphere(RngStream::named(cfg.seed, StreamFamily::anchors),
                                       cfg.p_anchors, dim);
      if (cfg.poly_kind == PolyKind::nystrom) rnd.nystrom = nystrom_whitening(rnd.anchors, cfg.lambda);
      break;
    case PolyKind::random_maclaurin:
      rnd.rademacher_r =
          sample_rademacher(RngStream::named(cfg.seed, StreamFamily::rademacher_r), cfg.d_p, dim);
      rnd.rademacher_s =
          sample_rademacher(RngStream::named(cfg.seed, StreamFamily::rademacher_s), cfg.d_p, dim);
      break;
    case PolyKind::tensorsketch:
      rnd.poly_sketch.emplace(TensorSketch2::draw(
          RngStream::named(cfg.seed, StreamFamily::poly_hash), dim, dim, cfg.d_p));
      break;
    case PolyKind::exact:
    case PolyKind::none:
      break;
  }

  if (cfg.poly_kind != PolyKind::none && cfg.fusion == FusionKind::sketch) {
    for (std::size_t node = 0; node < cfg.r; ++node)
      rnd.fusion_sketch.push_back(TensorSketch2::draw(
          RngStream::named(cfg.seed, StreamFamily::fusion_hash, static_cast<std::uint32_t>(node)),
          cfg.poly_dim(dim), cfg.d_prf, cfg.d_t));
  }
  return rnd;
}

/// psi: L x m feature rows, concatenated over quadrature nodes.
template <typename T = double>
struct FeatureMatrix {
  Matrix<T> psi;
  std::size_t m = 0;
  std::vector<std::pair<std::size_t, std::size_t>> node_spans;  // [begin, end) per node
  bool guaranteed_nonneg_scores = false;
  std::vector<std::string> diagnostics;
};

template <typename T>
Matrix<T> polynomial_factor(const Matrix<T>& u_hat, const SlayFeatureConfig& cfg,
                            FeatureRandomness& rnd) {
  switch (cfg.poly_kind) {
    case PolyKind::exact: return poly_exact(u_hat);
    case PolyKind::anchor: return poly_anchor(u_hat, rnd.anchors);
    case PolyKind::nystrom: return poly_nystrom(u_hat, rnd.anchors, *rnd.nystrom);
    case PolyKind::random_maclaurin:
      return poly_random_maclaurin(u_hat, rnd.rademacher_r, rnd.rademacher_s);
    case PolyKind::tensorsketch: return poly_tensorsketch(u_hat, *rnd.poly_sketch);
    case PolyKind::none: break;
  }
  return {};
}

/// Psi(u) = concat_r sqrt(w_r) * Fuse(phi_poly(u), phi_PRF(u; s_r)). With
/// poly_kind none, each node contributes sqrt(w_r) * phi_PRF(u; s_r).
template <typename T>
FeatureMatrix<T> slay_features(const Matrix<T>& u_hat, const SlayFeatureConfig& cfg,
                               const QuadratureRule& rule, FeatureRandomness& rnd) {
  require(rnd.dim == u_hat.cols(), ErrorKind::usage,
          "slay_features: randomness was drawn for a different input width");
  require(rule.r == cfg.r, ErrorKind::config, "slay_features: rule node count differs from config");
  cfg.validate(u_hat.cols());

  FeatureMatrix<T> out;
  const std::size_t node_dim = cfg.node_dim(u_hat.cols());
  out.m = cfg.r * node_dim;
  out.psi = Matrix<T>(u_hat.rows(), out.m);
  out.guaranteed_nonneg_scores = cfg.guarantees_nonneg_scores();
  if (rnd.nystrom && rnd.nystrom->diagnostic) out.diagnostics.push_back(*rnd.nystrom->diagnostic);

  const Matrix<T> poly = polynomial_factor(u_hat, cfg, rnd);
  for (std::size_t node = 0; node < cfg.r; ++node) {
    const Matrix<T> prf = prf_features(u_hat, rule.s[node], rnd.omega_for(node));
    const std::size_t begin = node * node_dim;
    if (cfg.poly_kind == PolyKind::none) {
      const T root_w = static_cast<T>(std::sqrt(rule.w[node]));
      for (std::size_t l = 0; l < u_hat.rows(); ++l) {
        auto src = prf.row(l);
        auto dst = out.psi.row(l).subspan(begin, node_dim);
        for (std::size_t j = 0; j < node_dim; ++j) dst[j] = root_w * src[j];
      }
    } else {
      TensorSketch2* sketch = cfg.fusion == FusionKind::sketch ? &rnd.fusion_sketch[node] : nullptr;
      fuse_node_into(poly, prf, rule.w[node], cfg.fusion, sketch, out.psi, begin);
    }
    out.node_spans.emplace_back(begin, begin + node_dim);
  }
  return out;
}

/// Convenience wrapper: draws randomness and a rule from cfg, then maps both
/// query and key rows with the shared draw.
template <typename T>
std::pair<FeatureMatrix<T>, FeatureMatrix<T>> slay_feature_pair(const Matrix<T>& q_hat,
                                                                 const Matrix<T>& k_hat,
                                                                 const SlayFeatureConfig& cfg) {
  const QuadratureRule rule = make_rule(cfg.r, cfg.kernel_params());
  FeatureRandomness rnd = draw_feature_randomness(cfg, q_hat.cols());
  auto fq = slay_features(q_hat, cfg, rule, rnd);
  auto fk = slay_features(k_hat, cfg, rule, rnd);
  return {std::move(fq), std::move(fk)};
}

}  // namespace slay
