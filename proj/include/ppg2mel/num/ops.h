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

#include "ppg2mel/num/rng.h"
#include "ppg2mel/num/tensor.h"

// Differentiable primitives. Every op records itself on the active tape when
// any input requires grad and recording is enabled.
namespace ppg2mel::num {

// --- elementwise, trailing-dimension broadcasting for binary ops ---
Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor mul(const Tensor& x, const Tensor& y);
Tensor div(const Tensor& x, const Tensor& y);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor neg(const Tensor& x);
Tensor square(const Tensor& x);
// log(1 + exp(x)), stable for large |x|.
Tensor softplus(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);

inline Tensor operator+(const Tensor& x, const Tensor& y) { return add(x, y); }
inline Tensor operator-(const Tensor& x, const Tensor& y) { return sub(x, y); }
inline Tensor operator*(const Tensor& x, const Tensor& y) { return mul(x, y); }
inline Tensor operator-(const Tensor& x) { return neg(x); }

// Broadcast shape of two operands, or DimensionError.
Shape broadcast_shape(const Shape& a, const Shape& b);

// --- linear algebra / layout ---
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
// Rows `ids` of a 2-D table (embedding lookup).
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);

// --- reductions ---
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Sum over one axis; the axis is removed (a rank-1 result stays rank 1).
Tensor sum_axis(const Tensor& x, std::size_t axis);

// --- nn primitives ---
enum class Padding { same, valid };

Tensor softmax(const Tensor& x, std::size_t axis);
// Inverted dropout: kept units scaled by 1/(1-rate). Identity when !training.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);

// x[T x Cin], kernel[k x Cin x Cout] -> [T' x Cout]. Cross-correlation.
Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, Padding padding);
// x[H x W x Cin], kernel[kh x kw x Cin x Cout] -> [H' x W' x Cout], same padding.
Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride_h,
              std::size_t stride_w);
// Max over a window along axis 0 of x[T x C], same padding (right side).
Tensor max_pool1d(const Tensor& x, std::size_t width, std::size_t stride);

}  // namespace ppg2mel::num
