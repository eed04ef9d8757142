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

// Linear-time SLAY attention next to the exact spherical oracle.

#include <iostream>

#include "slay/slay.hpp"

int main() {
  const std::size_t length = 256, dim = 32;
  const std::uint64_t seed = 7;
  const auto q = slay::sample_gaussian(slay::RngStream::named(seed, slay::StreamFamily::inputs, 0), length, dim);
  const auto k = slay::sample_gaussian(slay::RngStream::named(seed, slay::StreamFamily::inputs, 1), length, dim);
  const auto v = slay::sample_gaussian(slay::RngStream::named(seed, slay::StreamFamily::inputs, 2), length, dim);

  slay::MechanismOptions opt;
  opt.slay = slay::SlayFeatureConfig::paper_default();
  opt.slay.seed = seed;

  const auto approx = slay::run_mechanism(slay::Mechanism::slay, q, k, v, opt);
  const auto exact = slay::run_mechanism(slay::Mechanism::spherical_yat, q, k, v, opt);
  const auto report = slay::fidelity(approx.y, exact.y);

  std::cout << "feature dim " << opt.slay.feature_dim(dim) << "\n"
            << "rel_l2 " << report.rel_l2 << "  cosine " << report.cosine << "  mse " << report.mse << "\n"
            << "degenerate rows " << approx.degenerate_rows.size() << "\n";
  return 0;
}
