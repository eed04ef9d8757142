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

#include <atomic>
#include <cstddef>
#include <limits>
#include <memory>
#include <new>
#include <string>

namespace slay {

/// Thrown when a tracked allocation would push live bytes past the active cap.
/// Derives from std::bad_alloc so generic OOM handling still applies.
class AllocationCapExceeded : public std::bad_alloc {
 public:
  explicit AllocationCapExceeded(std::size_t requested) : requested_(requested) {}
  const char* what() const noexcept override { return "tracked allocation cap exceeded"; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t requested_;
};

/// Process-wide accounting of bytes held by tracked containers (Matrix and
/// TrackedVector). Peak and cap are used by the benchmark harness to report
/// auxiliary memory of a single attention call.
class AllocationTracker {
 public:
  static AllocationTracker& instance() {
    static AllocationTracker tracker;
    return tracker;
  }

  void acquire(std::size_t bytes) {
    const std::size_t now = current_.fetch_add(bytes) + bytes;
    if (now > cap_.load()) {
      current_.fetch_sub(bytes);
      throw AllocationCapExceeded(bytes);
    }
    std::size_t seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
  }

  void release(std::size_t bytes) noexcept { current_.fetch_sub(bytes); }

  std::size_t current() const noexcept { return current_.load(); }
  std::size_t peak() const noexcept { return peak_.load(); }
  std::size_t cap() const noexcept { return cap_.load(); }

  void set_cap(std::size_t cap) noexcept { cap_.store(cap); }
  void reset_peak(std::size_t value) noexcept { peak_.store(value); }

 private:
  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
  std::atomic<std::size_t> cap_{std::numeric_limits<std::size_t>::max()};
};

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = n * sizeof(T);
    AllocationTracker::instance().acquire(bytes);
    try {
      return std::allocator<T>{}.allocate(n);
    } catch (...) {
      AllocationTracker::instance().release(bytes);
      throw;
    }
  }

  void deallocate(T* p, std::size_t n) noexcept {
    std::allocator<T>{}.deallocate(p, n);
    AllocationTracker::instance().release(n * sizeof(T));
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

/// RAII window measuring auxiliary bytes: the baseline is the live byte count
/// at construction, and the cap (if any) limits bytes above that baseline.
/// Scopes are not meant to be nested across threads.
class AllocationScope {
 public:
  explicit AllocationScope(std::size_t aux_cap = std::numeric_limits<std::size_t>::max()) {
    auto& t = AllocationTracker::instance();
    baseline_ = t.current();
    saved_cap_ = t.cap();
    saved_peak_ = t.peak();
    t.reset_peak(baseline_);
    const std::size_t limit = std::numeric_limits<std::size_t>::max() - baseline_;
    t.set_cap(aux_cap >= limit ? std::numeric_limits<std::size_t>::max() : baseline_ + aux_cap);
  }

  AllocationScope(const AllocationScope&) = delete;
  AllocationScope& operator=(const AllocationScope&) = delete;

  ~AllocationScope() {
    auto& t = AllocationTracker::instance();
    t.set_cap(saved_cap_);
    if (saved_peak_ > t.peak()) t.reset_peak(saved_peak_);
  }

  std::size_t peak_aux_bytes() const noexcept {
    const std::size_t peak = AllocationTracker::instance().peak();
    return peak > baseline_ ? peak - baseline_ : 0;
  }

 private:
  std::size_t baseline_ = 0;
  std::size_t saved_cap_ = 0;
  std::size_t saved_peak_ = 0;
};

}  // namespace slay
