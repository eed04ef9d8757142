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

#include "slay/analysis.hpp"
#include "slay/attention_output.hpp"
#include "slay/baselines.hpp"
#include "slay/bench.hpp"
#include "slay/csv.hpp"
#include "slay/error.hpp"
#include "slay/exact_attention.hpp"
#include "slay/feature_config.hpp"
#include "slay/features.hpp"
#include "slay/invariants.hpp"
#include "slay/kernels.hpp"
#include "slay/linalg.hpp"
#include "slay/linear_attention.hpp"
#include "slay/mechanism.hpp"
#include "slay/memory.hpp"
#include "slay/quadrature.hpp"
#include "slay/rng.hpp"
#include "slay/sketch.hpp"
#include "slay/tensor.hpp"
#include "slay/tensor_io.hpp"
