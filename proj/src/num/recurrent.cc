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

#include "ppg2mel/num/recurrent.h"

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/ops.h"

namespace ppg2mel::num {

namespace {

Tensor as_rows(const Tensor& t) { return t.rank() == 1 ? reshape(t, {1, t.dim(0)}) : t; }

void check_gru(const Tensor& x2, const Tensor& h2, const GruParams& p) {
  const std::size_t hidden = h2.dim(1);
  if (p.w_hh.rank() != 2 || p.w_hh.dim(0) != hidden || p.w_hh.dim(1) != 3 * hidden ||
      p.w_ih.rank() != 2 || p.w_ih.dim(1) != 3 * hidden || p.b_ih.numel() != 3 * hidden ||
      p.b_hh.numel() != 3 * hidden || x2.dim(1) != p.w_ih.dim(0) || x2.dim(0) != h2.dim(0)) {
    throw DimensionError("gru_cell: x " + shape_str(x2.shape()) + ", h " +
                         shape_str(h2.shape()) + ", w_ih " + shape_str(p.w_ih.shape()) +
                         ", w_hh " + shape_str(p.w_hh.shape()));
  }
}

Tensor gru_from_projection(const Tensor& xp, const Tensor& h2, const GruParams& p) {
  const std::size_t hidden = h2.dim(1);
  Tensor hp = add(matmul(h2, p.w_hh), p.b_hh);
  Tensor rz = sigmoid(add(slice(xp, 1, 0, 2 * hidden), slice(hp, 1, 0, 2 * hidden)));
  Tensor r = slice(rz, 1, 0, hidden);
  Tensor z = slice(rz, 1, hidden, hidden);
  Tensor n = tanh(add(slice(xp, 1, 2 * hidden, hidden), mul(r, slice(hp, 1, 2 * hidden, hidden))));
  // (1 - z) * n + z * h  ==  n + z * (h - n)
  return add(n, mul(z, sub(h2, n)));
}

}  // namespace

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p) {
  if (x.rank() != h.rank()) throw DimensionError("gru_cell: x and h ranks differ");
  Tensor x2 = as_rows(x);
  Tensor h2 = as_rows(h);
  check_gru(x2, h2, p);
  Tensor out = gru_from_projection(add(matmul(x2, p.w_ih), p.b_ih), h2, p);
  return h.rank() == 1 ? reshape(out, {h.dim(0)}) : out;
}

Tensor gru_cell_projected(const Tensor& x_proj, const Tensor& h, const GruParams& p) {
  Tensor h2 = as_rows(h);
  Tensor xp = as_rows(x_proj);
  const std::size_t hidden = h2.dim(1);
  if (xp.dim(1) != 3 * hidden || xp.dim(0) != h2.dim(0) || p.w_hh.dim(0) != hidden) {
    throw DimensionError("gru_cell_projected: x_proj " + shape_str(xp.shape()) + ", h " +
                         shape_str(h2.shape()));
  }
  Tensor out = gru_from_projection(xp, h2, p);
  return h.rank() == 1 ? reshape(out, {h.dim(0)}) : out;
}

LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmParams& p) {
  if (x.rank() != state.h.rank() || state.h.shape() != state.c.shape()) {
    throw DimensionError("lstm_cell: x " + shape_str(x.shape()) + ", h " +
                         shape_str(state.h.shape()) + ", c " + shape_str(state.c.shape()));
  }
  Tensor x2 = as_rows(x);
  Tensor h2 = as_rows(state.h);
  Tensor c2 = as_rows(state.c);
  const std::size_t hidden = h2.dim(1);
  if (p.w_ih.rank() != 2 || p.w_ih.dim(0) != x2.dim(1) || p.w_ih.dim(1) != 4 * hidden ||
      p.w_hh.rank() != 2 || p.w_hh.dim(0) != hidden || p.w_hh.dim(1) != 4 * hidden ||
      p.b.numel() != 4 * hidden || x2.dim(0) != h2.dim(0)) {
    throw DimensionError("lstm_cell: x " + shape_str(x2.shape()) + ", h " +
                         shape_str(h2.shape()) + ", w_ih " + shape_str(p.w_ih.shape()) +
                         ", w_hh " + shape_str(p.w_hh.shape()));
  }
  Tensor gates = add(add(matmul(x2, p.w_ih), matmul(h2, p.w_hh)), p.b);
  Tensor ifo_pre = concat({slice(gates, 1, 0, 2 * hidden), slice(gates, 1, 3 * hidden, hidden)}, 1);
  Tensor ifo = sigmoid(ifo_pre);
  Tensor i = slice(ifo, 1, 0, hidden);
  Tensor f = slice(ifo, 1, hidden, hidden);
  Tensor o = slice(ifo, 1, 2 * hidden, hidden);
  Tensor g = tanh(slice(gates, 1, 2 * hidden, hidden));
  Tensor c_next = add(mul(f, c2), mul(i, g));
  Tensor h_next = mul(o, tanh(c_next));
  if (state.h.rank() == 1) {
    return {reshape(h_next, {hidden}), reshape(c_next, {hidden})};
  }
  return {h_next, c_next};
}

}  // namespace ppg2mel::num
