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

#include "ppg2mel/num/rng.h"
#include "ppg2mel/num/tensor.h"

namespace ppg2mel::num {

// uniform(-s, s), s = sqrt(6 / (fan_in + fan_out)); the result is a grad leaf.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
// Zero-filled grad leaf.
Tensor zeros_param(Shape shape);

}  // namespace ppg2mel::num
