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
#include <functional>
#include <limits>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "slay/analysis.hpp"
#include "slay/mechanism.hpp"
#include "slay/memory.hpp"

namespace slay {

inline constexpr std::size_t kDefaultQuadraticLengthCap = 16384;
inline constexpr std::size_t kDefaultAuxCapBytes = std::size_t{4} << 30;

struct BenchOptions {
  std::vector<Mechanism> mechanisms{Mechanism::slay, Mechanism::spherical_yat};
  std::vector<std::size_t> lengths;
  std::size_t d_model = 256;
  std::size_t heads = 8;
  bool causal = true;
  std::size_t reps = kDefaultTimingReps;
  std::size_t warmup = kDefaultWarmupReps;
  /// Timed runs stop once this many seconds have elapsed (at least one run).
  double budget_s = std::numeric_limits<double>::infinity();
  /// A warmup run slower than this ends the warmup phase.
  double slow_run_s = std::numeric_limits<double>::infinity();
  std::size_t quadratic_length_cap = kDefaultQuadraticLengthCap;
  std::size_t aux_cap_bytes = kDefaultAuxCapBytes;
  /// Zero every timing-derived field so repeated runs are byte-identical.
  bool serial_deterministic = false;
  /// Time the lengths of a mechanism in round-robin order; inputs for all
  /// lengths stay resident.
  bool interleave = false;
  bool use_f32 = false;
  MechanismOptions mechanism;
};

struct BenchRecord {
  std::string mechanism;
  std::size_t length = 0;
  std::size_t d_model = 0;
  std::size_t heads = 0;
  bool causal = false;
  std::uint64_t seed = 0;
  double latency_ms_median = 0.0;
  double latency_ms_iqr = 0.0;
  std::size_t timed_reps = 0;
  std::size_t peak_aux_bytes = 0;
  double throughput_tokens_per_s = 0.0;
  double flop_estimate = 0.0;
  double output_checksum = 0.0;
  std::string status;
};

/// Serves every allocation from the heap and never returns freed memory to
/// the OS, so repeated large allocations stop paying page faults. Timings on
/// a VM become markedly steadier. Process-wide; call once from main before
/// benchmarking. No-op outside glibc.
inline void retain_freed_memory() noexcept {
#ifdef __GLIBC__
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
}

/// L doubling from first to last inclusive.
inline std::vector<std::size_t> doubling_lengths(std::size_t first, std::size_t last) {
  require(first >= 1 && first <= last, ErrorKind::usage, "doubling_lengths: bad range");
  std::vector<std::size_t> out;
  for (std::size_t l = first; l <= last; l *= 2) out.push_back(l);
  return out;
}

namespace detail {

/// One (mechanism, L) point: inputs for every head and the partly filled record.
template <typename T>
struct BenchPoint {
  Mechanism mech;
  MechanismOptions mo;
  std::vector<Matrix<T>> q, k, v;
  BenchRecord rec;

  void run_heads() const {
    for (std::size_t h = 0; h < q.size(); ++h) (void)run_mechanism(mech, q[h], k[h], v[h], mo);
  }

  void set_timing(const TimingStats& t) {
    rec.latency_ms_median = t.median_ms;
    rec.latency_ms_iqr = t.iqr_ms;
    rec.timed_reps = t.reps;
    rec.throughput_tokens_per_s =
        t.median_ms > 0.0 ? static_cast<double>(rec.length) / (t.median_ms / 1e3) : 0.0;
  }
};

/// Builds inputs and makes the untimed run (checksum, peak memory, status).
/// Points whose status is not "ok" carry no inputs.
template <typename T>
BenchPoint<T> prepare_point(Mechanism mech, std::size_t length, const BenchOptions& opt) {
  const std::size_t d_head = opt.d_model / opt.heads;
  BenchPoint<T> pt{mech, opt.mechanism, {}, {}, {}, {}};
  pt.mo.causal = opt.causal;
  pt.mo.exact_row_block = 0;
  BenchRecord& rec = pt.rec;
  rec.mechanism = std::string(to_string(mech));
  rec.length = length;
  rec.d_model = opt.d_model;
  rec.heads = opt.heads;
  rec.causal = opt.causal;
  rec.seed = opt.mechanism.slay.seed;
  rec.flop_estimate = static_cast<double>(opt.heads) * flop_estimate(mech, length, d_head, d_head, pt.mo);

  if (is_quadratic(mech) && length > opt.quadratic_length_cap) {
    const double score_bytes = static_cast<double>(length) * static_cast<double>(length) * sizeof(T);
    if (score_bytes <= static_cast<double>(opt.aux_cap_bytes)) {
      rec.status = "skipped";
      return pt;
    }
  }

  for (std::size_t h = 0; h < opt.heads; ++h) {
    const auto base = static_cast<std::uint32_t>(3 * h);
    const std::uint64_t seed = opt.mechanism.slay.seed;
    pt.q.push_back(sample_gaussian(RngStream::named(seed, StreamFamily::inputs, base), length, d_head).cast<T>());
    pt.k.push_back(sample_gaussian(RngStream::named(seed, StreamFamily::inputs, base + 1), length, d_head).cast<T>());
    pt.v.push_back(sample_gaussian(RngStream::named(seed, StreamFamily::inputs, base + 2), length, d_head).cast<T>());
  }

  try {
    AllocationScope scope(opt.aux_cap_bytes);
    double checksum = 0.0;
    for (std::size_t h = 0; h < opt.heads; ++h) {
      const auto out = run_mechanism(mech, pt.q[h], pt.k[h], pt.v[h], pt.mo);
      for (T x : out.y.data()) checksum += static_cast<double>(x);
    }
    rec.output_checksum = checksum;
    rec.peak_aux_bytes = scope.peak_aux_bytes();
    rec.status = "ok";
  } catch (const AllocationCapExceeded&) {
    rec.status = "oom";
    pt.q.clear();
    pt.k.clear();
    pt.v.clear();
  }
  return pt;
}

/// Times every "ok" point of one mechanism. Sequential mode finishes one point
/// before the next; interleaved mode times one run per point per round, so
/// slow drift in machine speed hits all lengths alike. The untimed run in
/// prepare_point counts as the first warmup.
template <typename T>
void time_points(std::vector<BenchPoint<T>>& points, const BenchOptions& opt) {
  const std::size_t warmup = opt.warmup > 0 ? opt.warmup - 1 : 0;
  if (!opt.interleave) {
    for (auto& pt : points)
      if (pt.rec.status == "ok")
        pt.set_timing(time_median([&] { pt.run_heads(); }, opt.reps, warmup, opt.budget_s, opt.slow_run_s));
    return;
  }
  std::vector<std::function<void()>> fns;
  std::vector<BenchPoint<T>*> timed;
  for (auto& pt : points) {
    if (pt.rec.status != "ok") continue;
    timed.push_back(&pt);
    fns.push_back([p = &pt] { p->run_heads(); });
  }
  const auto stats = time_interleaved(fns, opt.reps, warmup, opt.budget_s, opt.slow_run_s);
  for (std::size_t i = 0; i < timed.size(); ++i) timed[i]->set_timing(stats[i]);
}

template <typename T>
void bench_mechanism(Mechanism mech, const BenchOptions& opt, std::vector<BenchRecord>& out) {
  std::vector<BenchPoint<T>> points;
  if (opt.interleave) {
    for (std::size_t l : opt.lengths) points.push_back(prepare_point<T>(mech, l, opt));
    if (!opt.serial_deterministic) time_points(points, opt);
    for (auto& pt : points) out.push_back(pt.rec);
    return;
  }
  // one point alive at a time keeps peak memory at the largest point
  for (std::size_t l : opt.lengths) {
    points.clear();
    points.push_back(prepare_point<T>(mech, l, opt));
    if (!opt.serial_deterministic) time_points(points, opt);
    out.push_back(points.front().rec);
  }
}

}  // namespace detail

/// One record per (mechanism, L). Heads run sequentially and their latencies
/// add up. Allocations inside the attention call count against aux_cap_bytes;
/// exceeding it records "oom". Quadratic mechanisms above the length cap are
/// attempted only when their score matrix alone exceeds the allocation cap.
inline std::vector<BenchRecord> run_bench(const BenchOptions& opt) {
  require(opt.heads >= 1 && opt.d_model % opt.heads == 0, ErrorKind::usage,
          "bench: d_model must be a positive multiple of heads");
  require(opt.d_model / opt.heads >= 2, ErrorKind::usage, "bench: head width must be >= 2");
  require(!opt.lengths.empty() && std::is_sorted(opt.lengths.begin(), opt.lengths.end()),
          ErrorKind::usage, "bench: lengths must be nonempty and ascending");
  require(!opt.mechanisms.empty(), ErrorKind::usage, "bench: no mechanisms");
  std::vector<BenchRecord> out;
  for (Mechanism m : opt.mechanisms) {
    if (opt.use_f32) {
      detail::bench_mechanism<float>(m, opt, out);
    } else {
      detail::bench_mechanism<double>(m, opt, out);
    }
  }
  return out;
}

inline const std::vector<std::string>& bench_columns() {
  static const std::vector<std::string> c{
      "mechanism",     "L",                "d_model",        "heads",
      "causal",        "seed",             "latency_ms_median", "latency_ms_iqr",
      "timed_reps",    "peak_aux_bytes",   "throughput_tokens_per_s", "flop_estimate",
      "output_checksum", "status"};
  return c;
}

inline CsvTable bench_table(const std::vector<BenchRecord>& records, std::string json_config) {
  CsvTable t(bench_columns(), std::move(json_config));
  for (const auto& r : records)
    t.add({r.mechanism, static_cast<long long>(r.length), static_cast<long long>(r.d_model),
           static_cast<long long>(r.heads), static_cast<long long>(r.causal ? 1 : 0),
           static_cast<long long>(r.seed), r.latency_ms_median, r.latency_ms_iqr,
           static_cast<long long>(r.timed_reps), static_cast<long long>(r.peak_aux_bytes),
           r.throughput_tokens_per_s, r.flop_estimate, r.output_checksum, r.status});
  return t;
}

}  // namespace slay
