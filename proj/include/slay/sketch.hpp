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

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "slay/rng.hpp"

namespace slay {

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Count-sketch bucket/sign tables drawn from the Carter-Wegman family
/// h(j) = ((a j + b) mod p) mod D with p = 2^61 - 1 (2-universal), and an
/// independent pair of coefficients for the sign bit.
struct HashSign {
  std::vector<std::uint32_t> bucket;
  std::vector<std::int8_t> sign;
  std::size_t width = 0;

  static HashSign draw(CounterEngine& engine, std::size_t input_dim, std::size_t width) {
    constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;
    const auto mulmod = [](std::uint64_t a, std::uint64_t b) {
      const detail::u128 prod = static_cast<detail::u128>(a) * b;
      std::uint64_t r = static_cast<std::uint64_t>(prod & kPrime) + static_cast<std::uint64_t>(prod >> 61);
      if (r >= kPrime) r -= kPrime;
      return r;
    };
    const std::uint64_t a = 1 + engine.below(kPrime - 1);
    const std::uint64_t b = engine.below(kPrime);
    const std::uint64_t a_sign = 1 + engine.below(kPrime - 1);
    const std::uint64_t b_sign = engine.below(kPrime);
    HashSign h{std::vector<std::uint32_t>(input_dim), std::vector<std::int8_t>(input_dim), width};
    for (std::size_t j = 0; j < input_dim; ++j) {
      const std::uint64_t key = j + 1;
      std::uint64_t hb = mulmod(a, key) + b;
      if (hb >= kPrime) hb -= kPrime;
      std::uint64_t hs = mulmod(a_sign, key) + b_sign;
      if (hs >= kPrime) hs -= kPrime;
      h.bucket[j] = static_cast<std::uint32_t>(hb % width);
      h.sign[j] = (hs & 1u) != 0 ? 1 : -1;
    }
    return h;
  }

  template <typename T>
  void apply(std::span<const T> x, std::span<double> out) const noexcept {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j)
      out[bucket[j]] += static_cast<double>(sign[j]) * static_cast<double>(x[j]);
  }
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Degree-2 TensorSketch: S(a (x) b) = IFFT(FFT(CS1 a) * FFT(CS2 b)), the
/// circular convolution of two count sketches. <S(a(x)b), S(c(x)d)> is an
/// unbiased estimate of <a,c><b,d>.
///
/// Owns FFTW plans and scratch buffers; one instance must not be used from
/// several threads at once.
class TensorSketch2 {
 public:
  TensorSketch2(HashSign first, HashSign second)
      : first_(std::move(first)), second_(std::move(second)), width_(first_.width) {
    require(is_power_of_two(width_), ErrorKind::config, "sketch width must be a power of two");
    require(second_.width == width_, ErrorKind::usage, "sketch hash widths differ");
    const std::size_t bins = width_ / 2 + 1;
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * width_));
    spec_a_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    spec_b_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    const int n = static_cast<int>(width_);
    forward_a_ = fftw_plan_dft_r2c_1d(n, real_, spec_a_, FFTW_ESTIMATE);
    forward_b_ = fftw_plan_dft_r2c_1d(n, real_, spec_b_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n, spec_a_, real_, FFTW_ESTIMATE);
  }

  static TensorSketch2 draw(const RngStream& stream, std::size_t dim_a, std::size_t dim_b,
                            std::size_t width) {
    require(is_power_of_two(width), ErrorKind::config, "sketch width must be a power of two");
    auto engine = stream.engine();
    HashSign h1 = HashSign::draw(engine, dim_a, width);
    HashSign h2 = HashSign::draw(engine, dim_b, width);
    return TensorSketch2(std::move(h1), std::move(h2));
  }

  TensorSketch2(const TensorSketch2& other) : TensorSketch2(other.first_, other.second_) {}
  TensorSketch2& operator=(const TensorSketch2&) = delete;
  TensorSketch2(TensorSketch2&& other) noexcept
      : first_(std::move(other.first_)),
        second_(std::move(other.second_)),
        width_(other.width_),
        real_(std::exchange(other.real_, nullptr)),
        spec_a_(std::exchange(other.spec_a_, nullptr)),
        spec_b_(std::exchange(other.spec_b_, nullptr)),
        forward_a_(std::exchange(other.forward_a_, nullptr)),
        forward_b_(std::exchange(other.forward_b_, nullptr)),
        backward_(std::exchange(other.backward_, nullptr)) {}
  TensorSketch2& operator=(TensorSketch2&&) = delete;

  ~TensorSketch2() {
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      if (forward_a_) fftw_destroy_plan(forward_a_);
      if (forward_b_) fftw_destroy_plan(forward_b_);
      if (backward_) fftw_destroy_plan(backward_);
    }
    fftw_free(real_);
    fftw_free(spec_a_);
    fftw_free(spec_b_);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t dim_a() const noexcept { return first_.bucket.size(); }
  std::size_t dim_b() const noexcept { return second_.bucket.size(); }

  /// Writes scale * S(a (x) b) into out (length width()).
  template <typename T, typename U, typename O>
  void apply(std::span<const T> a, std::span<const U> b, std::span<O> out, double scale = 1.0) {
    first_.apply(a, std::span<double>(real_, width_));
    fftw_execute(forward_a_);
    second_.apply(b, std::span<double>(real_, width_));
    fftw_execute(forward_b_);
    const std::size_t bins = width_ / 2 + 1;
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = spec_a_[k][0] * spec_b_[k][0] - spec_a_[k][1] * spec_b_[k][1];
      const double im = spec_a_[k][0] * spec_b_[k][1] + spec_a_[k][1] * spec_b_[k][0];
      spec_a_[k][0] = re;
      spec_a_[k][1] = im;
    }
    fftw_execute(backward_);
    const double norm = scale / static_cast<double>(width_);
    for (std::size_t k = 0; k < width_; ++k) out[k] = static_cast<O>(real_[k] * norm);
  }

 private:
  HashSign first_;
  HashSign second_;
  std::size_t width_;
  double* real_ = nullptr;
  fftw_complex* spec_a_ = nullptr;
  fftw_complex* spec_b_ = nullptr;
  fftw_plan forward_a_ = nullptr;
  fftw_plan forward_b_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace slay
