// Copyright 2026 The ppg2mel Authors.
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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ppg2mel/num/tensor.h"
#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::num {

struct GradcheckOptions {
  double step = 1e-5;
  // Entries checked per tensor; 0 checks every entry.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged against the finite-difference noise level instead of 0.
  double floor = 1e-4;
};

struct GradcheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  // Worst entry over all tensors.
  GradcheckEntry worst;
  std::size_t checked = 0;
  // Worst relative error per tensor name, in input order.
  std::vector<std::pair<std::string, double>> per_tensor;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Compares the tape gradient of `loss_fn()` with central differences for each
// named input. `loss_fn` must be deterministic and return a scalar.
GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedTensors& inputs,
                          const GradcheckOptions& options = {});

}  // namespace ppg2mel::num
