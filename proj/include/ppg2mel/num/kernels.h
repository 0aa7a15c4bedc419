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
#include <span>

// Raw compute kernels behind the differentiable ops. Two implementations:
//   serial::   textbook loops, kept as the reference the tests compare against
//   parallel:: cache-friendly loop order with OpenMP over independent outputs
// Every output element of a parallel kernel is reduced by exactly one thread
// in a fixed order, so results do not depend on the thread count.
namespace ppg2mel::num::kernels {

struct Conv1dGeom {
  std::size_t in_len, in_ch;
  std::size_t out_len, out_ch;
  std::size_t width, stride, pad_left;
};

struct Conv2dGeom {
  std::size_t in_h, in_w, in_ch;
  std::size_t out_h, out_w, out_ch;
  std::size_t kh, kw, sh, sw;
  std::size_t pad_top, pad_left;
};

// "same" padding: out = ceil(in / stride), zeros split evenly with the odd one
// on the right/bottom. Returns {out, pad_before}.
struct PadPlan {
  std::size_t out;
  std::size_t before;
};
PadPlan same_padding(std::size_t in, std::size_t width, std::size_t stride);

namespace serial {
// c = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
// da += dc * b^T
void matmul_grad_a(std::span<const double> dc, std::span<const double> b,
                   std::span<double> da, std::size_t m, std::size_t k, std::size_t n);
// db += a^T * dc
void matmul_grad_b(std::span<const double> a, std::span<const double> dc,
                   std::span<double> db, std::size_t m, std::size_t k, std::size_t n);

void conv1d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv1dGeom& g);
void conv1d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv1dGeom& g);
void conv1d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv1dGeom& g);

void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv2dGeom& g);
void conv2d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv2dGeom& g);
void conv2d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv2dGeom& g);
}  // namespace serial

namespace parallel {
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_a(std::span<const double> dc, std::span<const double> b,
                   std::span<double> da, std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_b(std::span<const double> a, std::span<const double> dc,
                   std::span<double> db, std::size_t m, std::size_t k, std::size_t n);

void conv1d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv1dGeom& g);
void conv1d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv1dGeom& g);
void conv1d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv1dGeom& g);

void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv2dGeom& g);
void conv2d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv2dGeom& g);
void conv2d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv2dGeom& g);
}  // namespace parallel

// Thread count used by the parallel kernels (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace ppg2mel::num::kernels
