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

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "slay/kernels.hpp"
#include "slay/quadrature.hpp"
#include "slay/sketch.hpp"

namespace slay {

enum class PolyKind { exact, anchor, nystrom, random_maclaurin, tensorsketch, none };
enum class FusionKind { kronecker, sketch, hadamard };

inline std::string_view to_string(PolyKind k) noexcept {
  switch (k) {
    case PolyKind::exact: return "exact";
    case PolyKind::anchor: return "anchor";
    case PolyKind::nystrom: return "nystrom";
    case PolyKind::random_maclaurin: return "random-maclaurin";
    case PolyKind::tensorsketch: return "tensorsketch";
    case PolyKind::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(FusionKind k) noexcept {
  switch (k) {
    case FusionKind::kronecker: return "kronecker";
    case FusionKind::sketch: return "sketch";
    case FusionKind::hadamard: return "hadamard";
  }
  return "?";
}

inline std::optional<PolyKind> parse_poly_kind(std::string_view s) noexcept {
  for (auto k : {PolyKind::exact, PolyKind::anchor, PolyKind::nystrom, PolyKind::random_maclaurin,
                 PolyKind::tensorsketch, PolyKind::none})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<FusionKind> parse_fusion_kind(std::string_view s) noexcept {
  for (auto k : {FusionKind::kronecker, FusionKind::sketch, FusionKind::hadamard})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline constexpr std::size_t kExactPolyCap = 4096;

/// Every approximation knob of the SLAY feature map.
struct SlayFeatureConfig {
  double epsilon = kDefaultEpsilon;
  double delta = kDefaultDelta;
  std::size_t r = kDefaultQuadratureNodes;
  std::size_t d_prf = 16;
  PolyKind poly_kind = PolyKind::anchor;
  std::size_t p_anchors = 8;
  std::size_t d_p = 64;
  double lambda = 1e-6;
  FusionKind fusion = FusionKind::kronecker;
  std::size_t d_t = 1024;
  std::uint64_t seed = 0;
  /// Reuse the first node's omega draw at every node.
  bool share_omega = false;

  /// R=3, D=16, P=8, eps=1e-3.
  static SlayFeatureConfig paper_default() { return {}; }

  /// R=8, D=256, P=32.
  static SlayFeatureConfig fidelity() {
    SlayFeatureConfig cfg;
    cfg.r = 8;
    cfg.d_prf = 256;
    cfg.p_anchors = 32;
    return cfg;
  }

  KernelParams kernel_params() const { return KernelParams(epsilon); }

  /// Width of the polynomial factor for inputs of width `dim`.
  std::size_t poly_dim(std::size_t dim) const noexcept {
    switch (poly_kind) {
      case PolyKind::exact: return dim * dim;
      case PolyKind::anchor:
      case PolyKind::nystrom: return p_anchors;
      case PolyKind::random_maclaurin:
      case PolyKind::tensorsketch: return d_p;
      case PolyKind::none: return 0;
    }
    return 0;
  }

  /// Columns contributed by one quadrature node.
  std::size_t node_dim(std::size_t dim) const noexcept {
    if (poly_kind == PolyKind::none) return d_prf;
    switch (fusion) {
      case FusionKind::kronecker: return poly_dim(dim) * d_prf;
      case FusionKind::sketch: return d_t;
      case FusionKind::hadamard: return d_prf;
    }
    return 0;
  }

  std::size_t feature_dim(std::size_t dim) const noexcept { return r * node_dim(dim); }

  /// Throws Error(config) on any violated invariant. `dim`, when known,
  /// enables the checks that depend on the input width.
  void validate(std::optional<std::size_t> dim = std::nullopt) const {
    const auto bad = [](const std::string& m) { fail(ErrorKind::config, "config: " + m); };
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) bad("epsilon must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta)) bad("delta must be nonnegative");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be nonnegative");
    if (r < 1 || r > kMaxQuadratureNodes) bad("r must be in [1, 64]");
    if (d_prf < 1 || p_anchors < 1 || d_p < 1 || d_t < 1) bad("all dimensions must be >= 1");
    if (poly_kind == PolyKind::none && fusion != FusionKind::kronecker)
      bad("poly_kind none does not take a fusion mode");
    if (poly_kind == PolyKind::tensorsketch && !is_power_of_two(d_p))
      bad("tensorsketch d_p must be a power of two");
    if (poly_kind != PolyKind::none && fusion == FusionKind::sketch && !is_power_of_two(d_t))
      bad("sketch fusion d_t must be a power of two");
    if (poly_kind != PolyKind::none && fusion == FusionKind::hadamard) {
      if (poly_kind != PolyKind::exact && poly_dim(0) != d_prf)
        bad("hadamard fusion needs polynomial feature dim == d_prf");
      if (poly_kind == PolyKind::exact && dim && (*dim) * (*dim) != d_prf)
        bad("hadamard fusion with exact poly needs d^2 == d_prf");
    }
    if (poly_kind == PolyKind::exact && dim && (*dim) * (*dim) > kExactPolyCap)
      bad("exact polynomial features exceed the d^2 <= 4096 cap");
  }

  /// Scores <psi(q), psi(k)> are nonnegative by construction.
  bool guarantees_nonneg_scores() const noexcept {
    if (poly_kind == PolyKind::none) return true;
    if (poly_kind == PolyKind::anchor)
      return fusion == FusionKind::kronecker || fusion == FusionKind::hadamard;
    if (poly_kind == PolyKind::exact) return fusion == FusionKind::kronecker;
    return false;
  }
};

/// Fixed key order, so serialized configs are byte-stable.
inline nlohmann::ordered_json config_to_json(const SlayFeatureConfig& c) {
  nlohmann::ordered_json j;
  j["epsilon"] = c.epsilon;
  j["delta"] = c.delta;
  j["r"] = c.r;
  j["d_prf"] = c.d_prf;
  j["poly_kind"] = std::string(to_string(c.poly_kind));
  j["p_anchors"] = c.p_anchors;
  j["d_p"] = c.d_p;
  j["lambda"] = c.lambda;
  j["fusion"] = std::string(to_string(c.fusion));
  j["d_t"] = c.d_t;
  j["seed"] = c.seed;
  j["share_omega"] = c.share_omega;
  return j;
}

inline std::string to_json_string(const SlayFeatureConfig& c) { return config_to_json(c).dump(); }

/// Parses a config object. Missing keys keep their defaults; unknown keys,
/// wrong types, and invariant violations raise Error(config).
inline SlayFeatureConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::config, "config: top level must be a JSON object");
  static const std::set<std::string> known{"epsilon", "delta", "r", "d_prf", "poly_kind",
                                           "p_anchors", "d_p", "lambda", "fusion", "d_t",
                                           "seed", "share_omega"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) fail(ErrorKind::config, "config: unknown field '" + key + "'");

  SlayFeatureConfig c;
  const auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) fail(ErrorKind::config, std::string("config: '") + key + "' must be a number");
    out = j[key].get<double>();
  };
  const auto count = [&](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned())
      fail(ErrorKind::config, std::string("config: '") + key + "' must be a nonnegative integer");
    out = j[key].get<std::size_t>();
  };
  number("epsilon", c.epsilon);
  number("delta", c.delta);
  number("lambda", c.lambda);
  count("r", c.r);
  count("d_prf", c.d_prf);
  count("p_anchors", c.p_anchors);
  count("d_p", c.d_p);
  count("d_t", c.d_t);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(ErrorKind::config, "config: 'seed' must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("share_omega")) {
    if (!j["share_omega"].is_boolean()) fail(ErrorKind::config, "config: 'share_omega' must be a boolean");
    c.share_omega = j["share_omega"].get<bool>();
  }
  if (j.contains("poly_kind")) {
    const auto& v = j["poly_kind"];
    auto kind = v.is_string() ? parse_poly_kind(v.get<std::string>()) : std::nullopt;
    if (!kind) fail(ErrorKind::config, "config: unknown poly_kind " + v.dump());
    c.poly_kind = *kind;
  }
  if (j.contains("fusion")) {
    const auto& v = j["fusion"];
    auto kind = v.is_string() ? parse_fusion_kind(v.get<std::string>()) : std::nullopt;
    if (!kind) fail(ErrorKind::config, "config: unknown fusion " + v.dump());
    c.fusion = *kind;
  }
  c.validate();
  return c;
}

inline SlayFeatureConfig config_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::config, std::string("config: malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace slay
