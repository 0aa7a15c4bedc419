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
#include <vector>

#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::train {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments per parameter tensor, in parameter order.
struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam update of every tensor in `params`. Empty state is
// initialised to zeros; a size mismatch anywhere is a DimensionError and
// leaves everything untouched.
void adam_step(num::NamedTensors& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, const AdamConfig& config);

// Scales all gradients so their joint L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double clip_global_norm(std::vector<std::vector<double>>& grads, double max_norm);

}  // namespace ppg2mel::train
