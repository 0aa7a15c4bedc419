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

#include "ppg2mel/num/tensor.h"

namespace ppg2mel::num {

// Gate layout along the 3H axis: reset, update, candidate.
struct GruParams {
  Tensor w_ih;  // [Din x 3H]
  Tensor w_hh;  // [H x 3H]
  Tensor b_ih;  // [3H]
  Tensor b_hh;  // [3H]
};

// Gate layout along the 4H axis: input, forget, cell candidate, output.
struct LstmParams {
  Tensor w_ih;  // [Din x 4H]
  Tensor w_hh;  // [H x 4H]
  Tensor b;     // [4H]
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// x may be [Din] or [N x Din]; h must have the matching rank ([H] or [N x H]).
//   r = sigmoid(x Wir + bir + h Whr + bhr)
//   z = sigmoid(x Wiz + biz + h Whz + bhz)
//   n = tanh(x Win + bin + r * (h Whn + bhn))
//   h' = (1 - z) * n + z * h
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p);

// Same recurrence with the input projection x Wih + bih precomputed ([N x 3H]).
// Sequence encoders project all timesteps in one matmul and feed rows here.
Tensor gru_cell_projected(const Tensor& x_proj, const Tensor& h, const GruParams& p);

//   i, f, o = sigmoid(...), g = tanh(...)
//   c' = f * c + i * g,  h' = o * tanh(c')
LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmParams& p);

}  // namespace ppg2mel::num
