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

namespace ppg2mel::num::kernels {

PadPlan same_padding(std::size_t in, std::size_t width, std::size_t stride) {
  std::size_t out = (in + stride - 1) / stride;
  std::size_t needed = (out - 1) * stride + width;
  std::size_t total = needed > in ? needed - in : 0;
  return {out, total / 2};
}

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b,
                   std::span<double> da, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dc[i * n + j] * b[p * n + j];
      da[i * k + p] += s;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> dc,
                   std::span<double> db, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a[i * k + p] * dc[i * n + j];
      db[p * n + j] += s;
    }
  }
}

namespace {
// Input index for output position `o` and tap `tap`, or -1 when it lands in
// the zero padding.
long tap_index(std::size_t o, std::size_t tap, std::size_t stride, std::size_t pad,
               std::size_t in_len) {
  long idx = static_cast<long>(o * stride + tap) - static_cast<long>(pad);
  if (idx < 0 || idx >= static_cast<long>(in_len)) return -1;
  return idx;
}
}  // namespace

void conv1d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv1dGeom& g) {
  for (std::size_t t = 0; t < g.out_len; ++t) {
    for (std::size_t co = 0; co < g.out_ch; ++co) {
      double s = 0.0;
      for (std::size_t dk = 0; dk < g.width; ++dk) {
        long u = tap_index(t, dk, g.stride, g.pad_left, g.in_len);
        if (u < 0) continue;
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          s += x[u * g.in_ch + ci] * w[(dk * g.in_ch + ci) * g.out_ch + co];
        }
      }
      y[t * g.out_ch + co] = s;
    }
  }
}

void conv1d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv1dGeom& g) {
  for (std::size_t t = 0; t < g.out_len; ++t) {
    for (std::size_t dk = 0; dk < g.width; ++dk) {
      long u = tap_index(t, dk, g.stride, g.pad_left, g.in_len);
      if (u < 0) continue;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
          dx[u * g.in_ch + ci] +=
              dy[t * g.out_ch + co] * w[(dk * g.in_ch + ci) * g.out_ch + co];
        }
      }
    }
  }
}

void conv1d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv1dGeom& g) {
  for (std::size_t t = 0; t < g.out_len; ++t) {
    for (std::size_t dk = 0; dk < g.width; ++dk) {
      long u = tap_index(t, dk, g.stride, g.pad_left, g.in_len);
      if (u < 0) continue;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
          dw[(dk * g.in_ch + ci) * g.out_ch + co] +=
              x[u * g.in_ch + ci] * dy[t * g.out_ch + co];
        }
      }
    }
  }
}

void conv2d(std::span<const double> x, std::span<const double> w, std::span<double> y,
            const Conv2dGeom& g) {
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      for (std::size_t co = 0; co < g.out_ch; ++co) {
        double s = 0.0;
        for (std::size_t a = 0; a < g.kh; ++a) {
          long ih = tap_index(oh, a, g.sh, g.pad_top, g.in_h);
          if (ih < 0) continue;
          for (std::size_t b = 0; b < g.kw; ++b) {
            long iw = tap_index(ow, b, g.sw, g.pad_left, g.in_w);
            if (iw < 0) continue;
            for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
              s += x[(ih * g.in_w + iw) * g.in_ch + ci] *
                   w[((a * g.kw + b) * g.in_ch + ci) * g.out_ch + co];
            }
          }
        }
        y[(oh * g.out_w + ow) * g.out_ch + co] = s;
      }
    }
  }
}

void conv2d_grad_input(std::span<const double> dy, std::span<const double> w,
                       std::span<double> dx, const Conv2dGeom& g) {
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      for (std::size_t a = 0; a < g.kh; ++a) {
        long ih = tap_index(oh, a, g.sh, g.pad_top, g.in_h);
        if (ih < 0) continue;
        for (std::size_t b = 0; b < g.kw; ++b) {
          long iw = tap_index(ow, b, g.sw, g.pad_left, g.in_w);
          if (iw < 0) continue;
          for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
            for (std::size_t co = 0; co < g.out_ch; ++co) {
              dx[(ih * g.in_w + iw) * g.in_ch + ci] +=
                  dy[(oh * g.out_w + ow) * g.out_ch + co] *
                  w[((a * g.kw + b) * g.in_ch + ci) * g.out_ch + co];
            }
          }
        }
      }
    }
  }
}

void conv2d_grad_kernel(std::span<const double> x, std::span<const double> dy,
                        std::span<double> dw, const Conv2dGeom& g) {
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      for (std::size_t a = 0; a < g.kh; ++a) {
        long ih = tap_index(oh, a, g.sh, g.pad_top, g.in_h);
        if (ih < 0) continue;
        for (std::size_t b = 0; b < g.kw; ++b) {
          long iw = tap_index(ow, b, g.sw, g.pad_left, g.in_w);
          if (iw < 0) continue;
          for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
            for (std::size_t co = 0; co < g.out_ch; ++co) {
              dw[((a * g.kw + b) * g.in_ch + ci) * g.out_ch + co] +=
                  x[(ih * g.in_w + iw) * g.in_ch + ci] *
                  dy[(oh * g.out_w + ow) * g.out_ch + co];
            }
          }
        }
      }
    }
  }
}

}  // namespace serial
}  // namespace ppg2mel::num::kernels
