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

#include "ppg2mel/num/kernels.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ppg2mel::num::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

namespace parallel {

namespace {
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 15;

// Output position whose tap `tap` reads input `u`, or -1.
long source_position(std::size_t u, std::size_t tap, std::size_t stride,
                     std::size_t pad, std::size_t out_len) {
  long num = static_cast<long>(u + pad) - static_cast<long>(tap);
  if (num < 0 || num % static_cast<long>(stride) != 0) return -1;
  long o = num / static_cast<long>(stride);
  return o < static_cast<long>(out_len) ? o : -1;
}

long tap_index(std::size_t o, std::size_t tap, std::size_t stride, std::size_t pad,
               std::size_t in_len) {
  long idx = static_cast<long>(o * stride + tap) - static_cast<long>(pad);
  if (idx < 0 || idx >= static_cast<long>(in_len)) return -1;
  return idx;
}
}  // namespace

void matmul(std::span<const double> a_, std::span<const double> b_, std::span<double> c_,
            std::size_t m, std::size_t k, std::size_t n) {
  const double* __restrict__ a = a_.data();
  const double* __restrict__ b = b_.data();
  double* __restrict__ c = c_.data();
  const bool big = m * k * n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void matmul_grad_a(std::span<const double> dc_, std::span<const double> b_,
                   std::span<double> da_, std::size_t m, std::size_t k, std::size_t n) {
  const double* __restrict__ dc = dc_.data();
  const double* __restrict__ b = b_.data();
  double* __restrict__ da = da_.data();
  const bool big = m * k * n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t i = 0; i < m; ++i) {
    const double* dcrow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
      da[i * k + p] += s;
    }
  }
}

void matmul_grad_b(std::span<const double> a_, std::span<const double> dc_,
                   std::span<double> db_, std::size_t m, std::size_t k, std::size_t n) {
  const double* __restrict__ a = a_.data();
  const double* __restrict__ dc = dc_.data();
  double* __restrict__ db = db_.data();
  const bool big = m * k * n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t p = 0; p < k; ++p) {
    double* dbrow = db + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aip = a[i * k + p];
      const double* dcrow = dc + i * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += aip * dcrow[j];
    }
  }
}

void conv1d(std::span<const double> x_, std::span<const double> w_, std::span<double> y_,
            const Conv1dGeom& g) {
  const double* __restrict__ x = x_.data();
  const double* __restrict__ w = w_.data();
  double* __restrict__ y = y_.data();
  const bool big = g.out_len * g.width * g.in_ch * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t t = 0; t < g.out_len; ++t) {
    double* yrow = y + t * g.out_ch;
    for (std::size_t co = 0; co < g.out_ch; ++co) yrow[co] = 0.0;
    for (std::size_t dk = 0; dk < g.width; ++dk) {
      long u = tap_index(t, dk, g.stride, g.pad_left, g.in_len);
      if (u < 0) continue;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        const double xv = x[u * g.in_ch + ci];
        const double* wrow = w + (dk * g.in_ch + ci) * g.out_ch;
        for (std::size_t co = 0; co < g.out_ch; ++co) yrow[co] += xv * wrow[co];
      }
    }
  }
}

void conv1d_grad_input(std::span<const double> dy_, std::span<const double> w_,
                       std::span<double> dx_, const Conv1dGeom& g) {
  const double* __restrict__ dy = dy_.data();
  const double* __restrict__ w = w_.data();
  double* __restrict__ dx = dx_.data();
  const bool big = g.in_len * g.width * g.in_ch * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t u = 0; u < g.in_len; ++u) {
    for (std::size_t dk = 0; dk < g.width; ++dk) {
      long t = source_position(u, dk, g.stride, g.pad_left, g.out_len);
      if (t < 0) continue;
      const double* dyrow = dy + t * g.out_ch;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        const double* wrow = w + (dk * g.in_ch + ci) * g.out_ch;
        double s = 0.0;
        for (std::size_t co = 0; co < g.out_ch; ++co) s += dyrow[co] * wrow[co];
        dx[u * g.in_ch + ci] += s;
      }
    }
  }
}

void conv1d_grad_kernel(std::span<const double> x_, std::span<const double> dy_,
                        std::span<double> dw_, const Conv1dGeom& g) {
  const double* __restrict__ x = x_.data();
  const double* __restrict__ dy = dy_.data();
  double* __restrict__ dw = dw_.data();
  const std::size_t taps = g.width * g.in_ch;
  const bool big = g.out_len * taps * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t idx = 0; idx < taps; ++idx) {
    const std::size_t dk = idx / g.in_ch;
    const std::size_t ci = idx % g.in_ch;
    double* dwrow = dw + idx * g.out_ch;
    for (std::size_t t = 0; t < g.out_len; ++t) {
      long u = tap_index(t, dk, g.stride, g.pad_left, g.in_len);
      if (u < 0) continue;
      const double xv = x[u * g.in_ch + ci];
      const double* dyrow = dy + t * g.out_ch;
      for (std::size_t co = 0; co < g.out_ch; ++co) dwrow[co] += xv * dyrow[co];
    }
  }
}

void conv2d(std::span<const double> x_, std::span<const double> w_, std::span<double> y_,
            const Conv2dGeom& g) {
  const double* __restrict__ x = x_.data();
  const double* __restrict__ w = w_.data();
  double* __restrict__ y = y_.data();
  const std::size_t positions = g.out_h * g.out_w;
  const bool big = positions * g.kh * g.kw * g.in_ch * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t pos = 0; pos < positions; ++pos) {
    const std::size_t oh = pos / g.out_w;
    const std::size_t ow = pos % g.out_w;
    double* yrow = y + pos * g.out_ch;
    for (std::size_t co = 0; co < g.out_ch; ++co) yrow[co] = 0.0;
    for (std::size_t a = 0; a < g.kh; ++a) {
      long ih = tap_index(oh, a, g.sh, g.pad_top, g.in_h);
      if (ih < 0) continue;
      for (std::size_t b = 0; b < g.kw; ++b) {
        long iw = tap_index(ow, b, g.sw, g.pad_left, g.in_w);
        if (iw < 0) continue;
        const double* xpix = x + (ih * g.in_w + iw) * g.in_ch;
        const double* wtap = w + (a * g.kw + b) * g.in_ch * g.out_ch;
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          const double xv = xpix[ci];
          const double* wrow = wtap + ci * g.out_ch;
          for (std::size_t co = 0; co < g.out_ch; ++co) yrow[co] += xv * wrow[co];
        }
      }
    }
  }
}

void conv2d_grad_input(std::span<const double> dy_, std::span<const double> w_,
                       std::span<double> dx_, const Conv2dGeom& g) {
  const double* __restrict__ dy = dy_.data();
  const double* __restrict__ w = w_.data();
  double* __restrict__ dx = dx_.data();
  const std::size_t pixels = g.in_h * g.in_w;
  const bool big = pixels * g.kh * g.kw * g.in_ch * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t pix = 0; pix < pixels; ++pix) {
    const std::size_t ih = pix / g.in_w;
    const std::size_t iw = pix % g.in_w;
    for (std::size_t a = 0; a < g.kh; ++a) {
      long oh = source_position(ih, a, g.sh, g.pad_top, g.out_h);
      if (oh < 0) continue;
      for (std::size_t b = 0; b < g.kw; ++b) {
        long ow = source_position(iw, b, g.sw, g.pad_left, g.out_w);
        if (ow < 0) continue;
        const double* dyrow = dy + (oh * g.out_w + ow) * g.out_ch;
        const double* wtap = w + (a * g.kw + b) * g.in_ch * g.out_ch;
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          const double* wrow = wtap + ci * g.out_ch;
          double s = 0.0;
          for (std::size_t co = 0; co < g.out_ch; ++co) s += dyrow[co] * wrow[co];
          dx[pix * g.in_ch + ci] += s;
        }
      }
    }
  }
}

void conv2d_grad_kernel(std::span<const double> x_, std::span<const double> dy_,
                        std::span<double> dw_, const Conv2dGeom& g) {
  const double* __restrict__ x = x_.data();
  const double* __restrict__ dy = dy_.data();
  double* __restrict__ dw = dw_.data();
  const std::size_t taps = g.kh * g.kw * g.in_ch;
  const bool big = g.out_h * g.out_w * taps * g.out_ch >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t idx = 0; idx < taps; ++idx) {
    const std::size_t ci = idx % g.in_ch;
    const std::size_t ab = idx / g.in_ch;
    const std::size_t a = ab / g.kw;
    const std::size_t b = ab % g.kw;
    double* dwrow = dw + idx * g.out_ch;
    for (std::size_t oh = 0; oh < g.out_h; ++oh) {
      long ih = tap_index(oh, a, g.sh, g.pad_top, g.in_h);
      if (ih < 0) continue;
      for (std::size_t ow = 0; ow < g.out_w; ++ow) {
        long iw = tap_index(ow, b, g.sw, g.pad_left, g.in_w);
        if (iw < 0) continue;
        const double xv = x[(ih * g.in_w + iw) * g.in_ch + ci];
        const double* dyrow = dy + (oh * g.out_w + ow) * g.out_ch;
        for (std::size_t co = 0; co < g.out_ch; ++co) dwrow[co] += xv * dyrow[co];
      }
    }
  }
}

}  // namespace parallel
}  // namespace ppg2mel::num::kernels
