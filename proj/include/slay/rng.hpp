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
#include <cstdint>
#include <limits>
#include <numbers>

#include "slay/tensor.hpp"

namespace slay {

namespace detail {

__extension__ typedef unsigned __int128 u128;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Families of randomness drawn by the feature constructions. Each family and
/// index pair maps to its own stream so ablations can change one family
/// without perturbing the others.
enum class StreamFamily : std::uint32_t {
  prf_omega = 1,
  anchors = 2,
  rademacher_r = 3,
  rademacher_s = 4,
  poly_hash = 5,
  fusion_hash = 6,
  favor_omega = 7,
  inputs = 8,
};

/// Counter-based generator: the n-th output is a pure function of
/// (seed, stream_id, n), so draws are identical on every platform.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_lo_(detail::mix64(seed ^ detail::mix64(stream_id + detail::kGolden))),
        key_hi_(detail::mix64(stream_id ^ detail::mix64(seed + 0x632BE59BD9B4E019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t c = counter_++;
    return detail::mix64(detail::mix64(c * detail::kGolden + key_lo_) ^ key_hi_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  int rademacher() noexcept { return ((*this)() >> 63) != 0 ? 1 : -1; }

  /// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift.
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<detail::u128>((*this)()) * bound) >> 64);
  }

 private:
  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Immutable stream descriptor. Every call to engine() restarts the stream.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  static RngStream named(std::uint64_t seed, StreamFamily family, std::uint32_t index = 0) noexcept {
    return {seed, (static_cast<std::uint64_t>(family) << 32) | index};
  }

  CounterEngine engine() const noexcept { return {seed, stream_id}; }
};

/// rows x cols matrix of i.i.d. N(0, 1) draws.
inline Matrix<double> sample_gaussian(const RngStream& rng, std::size_t rows, std::size_t cols) {
  require(rows >= 1 && cols >= 1, ErrorKind::usage, "sample_gaussian: empty shape");
  auto engine = rng.engine();
  Matrix<double> out(rows, cols);
  for (double& v : out.data()) v = engine.gaussian();
  return out;
}

/// rows x cols matrix of i.i.d. +-1 draws.
inline Matrix<double> sample_rademacher(const RngStream& rng, std::size_t rows, std::size_t cols) {
  require(rows >= 1 && cols >= 1, ErrorKind::usage, "sample_rademacher: empty shape");
  auto engine = rng.engine();
  Matrix<double> out(rows, cols);
  for (double& v : out.data()) v = engine.rademacher();
  return out;
}

/// Rows drawn uniformly on the unit sphere S^{cols-1}.
inline Matrix<double> sample_unit_sphere(const RngStream& rng, std::size_t rows, std::size_t cols) {
  auto g = sample_gaussian(rng, rows, cols);
  return normalize_rows(g).rows;
}

}  // namespace slay
