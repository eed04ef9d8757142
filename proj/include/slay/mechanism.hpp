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
#include <string_view>
#include <utility>

#include "slay/baselines.hpp"
#include "slay/exact_attention.hpp"
#include "slay/features.hpp"
#include "slay/linear_attention.hpp"

namespace slay {

enum class Mechanism { softmax, yat, spherical_yat, slay, favor, elu1, cosformer };

inline constexpr Mechanism kAllMechanisms[] = {Mechanism::softmax, Mechanism::yat,
                                               Mechanism::spherical_yat, Mechanism::slay,
                                               Mechanism::favor, Mechanism::elu1,
                                               Mechanism::cosformer};

inline std::string_view to_string(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::softmax: return "softmax";
    case Mechanism::yat: return "yat";
    case Mechanism::spherical_yat: return "spherical-yat";
    case Mechanism::slay: return "slay";
    case Mechanism::favor: return "favor";
    case Mechanism::elu1: return "elu1";
    case Mechanism::cosformer: return "cosformer";
  }
  return "?";
}

inline std::optional<Mechanism> parse_mechanism(std::string_view s) noexcept {
  for (auto m : kAllMechanisms)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline bool is_quadratic(Mechanism m) noexcept {
  return m == Mechanism::softmax || m == Mechanism::yat || m == Mechanism::spherical_yat;
}

struct MechanismOptions {
  /// SLAY knobs; epsilon, delta and seed are also used by the other mechanisms.
  SlayFeatureConfig slay;
  bool causal = false;
  std::size_t favor_features = 64;
  /// Normalize rows before FAVOR+ features.
  bool favor_normalize = false;
  bool scale_softmax = true;
  std::size_t exact_row_block = 0;
};

template <typename T>
struct FeaturePair {
  Matrix<T> psi_q;
  Matrix<T> psi_k;
};

/// Query/key feature maps for the linear-time mechanisms.
template <typename T>
FeaturePair<T> mechanism_features(Mechanism mech, const Matrix<T>& q, const Matrix<T>& k,
                                  const MechanismOptions& opt) {
  switch (mech) {
    case Mechanism::slay: {
      auto [fq, fk] = slay_feature_pair(normalize_rows(q).rows, normalize_rows(k).rows, opt.slay);
      return {std::move(fq.psi), std::move(fk.psi)};
    }
    case Mechanism::favor: {
      const Matrix<double> omega = sample_gaussian(
          RngStream::named(opt.slay.seed, StreamFamily::favor_omega), opt.favor_features, q.cols());
      if (opt.favor_normalize)
        return {favor_plus_features(normalize_rows(q).rows, omega),
                favor_plus_features(normalize_rows(k).rows, omega)};
      return {favor_plus_features(q, omega), favor_plus_features(k, omega)};
    }
    case Mechanism::elu1:
      return {elu_plus_one_features(q), elu_plus_one_features(k)};
    case Mechanism::cosformer: {
      const auto pos = iota_positions(q.rows());
      return {cosformer_features(q, pos, q.rows()), cosformer_features(k, pos, k.rows())};
    }
    default:
      fail(ErrorKind::usage, std::string("mechanism ") + std::string(to_string(mech)) +
                                 " has no linear feature map");
  }
}

/// Runs one attention mechanism end to end on raw Q, K, V rows.
template <typename T>
AttentionOutput<T> run_mechanism(Mechanism mech, const Matrix<T>& q, const Matrix<T>& k,
                                 const Matrix<T>& v, const MechanismOptions& opt) {
  if (is_quadratic(mech)) {
    ExactOptions eo;
    eo.causal = opt.causal;
    eo.delta = opt.slay.delta;
    eo.scale_softmax = opt.scale_softmax;
    eo.row_block = opt.exact_row_block;
    const ExactKernel kernel = mech == Mechanism::softmax ? ExactKernel::softmax
                               : mech == Mechanism::yat   ? ExactKernel::yat
                                                          : ExactKernel::spherical_yat;
    return exact_attention(q, k, v, kernel, opt.slay.kernel_params(), eo);
  }
  auto f = mechanism_features(mech, q, k, opt);
  return opt.causal ? causal_linear_attention(f.psi_q, f.psi_k, v, opt.slay.delta)
                    : linear_attention(f.psi_q, f.psi_k, v, opt.slay.delta);
}

/// Analytic operation count for one head; linear mechanisms scale exactly with L.
inline double flop_estimate(Mechanism mech, std::size_t length, std::size_t d, std::size_t dv,
                            const MechanismOptions& opt) {
  const double l = static_cast<double>(length);
  const double dd = static_cast<double>(d);
  const double dvv = static_cast<double>(dv);
  if (is_quadratic(mech)) {
    const double pairs = opt.causal ? l * (l + 1.0) / 2.0 : l * l;
    return pairs * (2.0 * dd + 2.0 * dvv + 4.0);
  }
  double m = 0.0;
  double per_token_features = 0.0;
  switch (mech) {
    case Mechanism::slay: {
      const auto& c = opt.slay;
      m = static_cast<double>(c.feature_dim(d));
      const double prf = static_cast<double>(c.r * c.d_prf) * (2.0 * dd + 2.0);
      double poly = 0.0;
      switch (c.poly_kind) {
        case PolyKind::exact: poly = dd * dd; break;
        case PolyKind::anchor: poly = static_cast<double>(c.p_anchors) * (2.0 * dd + 1.0); break;
        case PolyKind::nystrom:
          poly = static_cast<double>(c.p_anchors) * (2.0 * dd + 2.0 * static_cast<double>(c.p_anchors));
          break;
        case PolyKind::random_maclaurin: poly = static_cast<double>(c.d_p) * (4.0 * dd + 1.0); break;
        case PolyKind::tensorsketch: {
          const double w = static_cast<double>(c.d_p);
          poly = 2.0 * dd + 3.0 * w * std::log2(w);
          break;
        }
        case PolyKind::none: break;
      }
      per_token_features = prf + poly + 2.0 * m;
      break;
    }
    case Mechanism::favor:
      m = static_cast<double>(opt.favor_features);
      per_token_features = m * (2.0 * dd + 1.0);
      break;
    case Mechanism::elu1:
      m = dd;
      per_token_features = dd;
      break;
    case Mechanism::cosformer:
      m = 2.0 * dd;
      per_token_features = 2.0 * dd;
      break;
    default: break;
  }
  // two feature maps plus the (S, z) contraction and the query readout
  return l * (2.0 * per_token_features + 4.0 * m * dvv + 4.0 * m);
}

}  // namespace slay
