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

#include <cstddef>
#include <vector>

#include "slay/tensor.hpp"

namespace slay {

/// Result of any kernel-normalized attention call. `denominators` are the
/// row sums before delta is added. Rows whose denominator is <= 0 are listed
/// in `degenerate_rows`; rows with denominator + delta <= 0 are returned as zeros.
template <typename T = double>
struct AttentionOutput {
  Matrix<T> y;
  std::vector<double> denominators;
  std::vector<std::size_t> degenerate_rows;

  bool has_degenerate_rows() const noexcept { return !degenerate_rows.empty(); }
};

}  // namespace slay
