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

#include "ppg2mel/num/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/kernels.h"

namespace ppg2mel::num {

namespace {

bool tracks(const Tensor& t) { return grad_enabled() && t.requires_grad(); }

Tensor make_out(Shape shape, bool needs_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), 0.0);
  impl->shape = std::move(shape);
  if (needs_grad) {
    impl->requires_grad = true;
    impl->grad.assign(impl->data.size(), 0.0);
  }
  return Tensor(std::move(impl));
}

void record(const Tensor& out, Tape::BackwardFn fn) {
  Tape::active().record(out.impl(), std::move(fn));
}

// Calls f(out_index, a_index, b_index) for every element of the broadcast
// result.
template <class F>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b, F&& f) {
  const std::size_t n = shape_numel(out);
  const std::size_t na = shape_numel(a);
  const std::size_t nb = shape_numel(b);
  if (na == n && nb == n) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  if (na == n && nb == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, 0);
    return;
  }
  if (na == 1 && nb == n) {
    for (std::size_t i = 0; i < n; ++i) f(i, 0, i);
    return;
  }
  auto is_suffix = [&](const Shape& s) {
    if (s.size() > out.size()) return false;
    return std::equal(s.begin(), s.end(), out.end() - static_cast<long>(s.size()));
  };
  if (na == n && is_suffix(b)) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i % nb);
    return;
  }
  if (nb == n && is_suffix(a)) {
    for (std::size_t i = 0; i < n; ++i) f(i, i % na, i);
    return;
  }
  const std::size_t r = out.size();
  std::vector<std::size_t> sa(r, 0), sb(r, 0), idx(r, 0);
  auto strides = [r](const Shape& s, std::vector<std::size_t>& st) {
    std::size_t off = r - s.size();
    std::size_t acc = 1;
    for (std::size_t d = s.size(); d-- > 0;) {
      st[d + off] = s[d] == 1 ? 0 : acc;
      acc *= s[d];
    }
  };
  strides(a, sa);
  strides(b, sb);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < out[d]) break;
      ia -= sa[d] * idx[d];
      ib -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  Tensor out = make_out(x.shape(), tracks(x));
  const auto& xs = x.values();
  auto ys = out.mutable_data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = fwd(xs[i]);
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, deriv] {
      for (std::size_t i = 0; i < oi->data.size(); ++i) {
        xi->grad[i] += oi->grad[i] * deriv(xi->data[i], oi->data[i]);
      }
    });
  }
  return out;
}

enum class BinOp { add, sub, mul, div };

Tensor binary(const Tensor& x, const Tensor& y, BinOp op) {
  Shape shape = broadcast_shape(x.shape(), y.shape());
  const bool gx = tracks(x), gy = tracks(y);
  Tensor out = make_out(shape, gx || gy);
  const double* xs = x.values().data();
  const double* ys = y.values().data();
  double* os = out.mutable_data().data();
  switch (op) {
    case BinOp::add:
      for_each_broadcast(shape, x.shape(), y.shape(),
                         [&](std::size_t i, std::size_t a, std::size_t b) { os[i] = xs[a] + ys[b]; });
      break;
    case BinOp::sub:
      for_each_broadcast(shape, x.shape(), y.shape(),
                         [&](std::size_t i, std::size_t a, std::size_t b) { os[i] = xs[a] - ys[b]; });
      break;
    case BinOp::mul:
      for_each_broadcast(shape, x.shape(), y.shape(),
                         [&](std::size_t i, std::size_t a, std::size_t b) { os[i] = xs[a] * ys[b]; });
      break;
    case BinOp::div:
      for_each_broadcast(shape, x.shape(), y.shape(),
                         [&](std::size_t i, std::size_t a, std::size_t b) { os[i] = xs[a] / ys[b]; });
      break;
  }
  if (out.requires_grad()) {
    auto xi = x.impl();
    auto yi = y.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, yi, oi, gx, gy, op] {
      const double* g = oi->grad.data();
      const double* xd = xi->data.data();
      const double* yd = yi->data.data();
      double* dx = gx ? xi->grad.data() : nullptr;
      double* dy = gy ? yi->grad.data() : nullptr;
      for_each_broadcast(oi->shape, xi->shape, yi->shape,
                         [&](std::size_t i, std::size_t a, std::size_t b) {
                           switch (op) {
                             case BinOp::add:
                               if (dx) dx[a] += g[i];
                               if (dy) dy[b] += g[i];
                               break;
                             case BinOp::sub:
                               if (dx) dx[a] += g[i];
                               if (dy) dy[b] -= g[i];
                               break;
                             case BinOp::mul:
                               if (dx) dx[a] += g[i] * yd[b];
                               if (dy) dy[b] += g[i] * xd[a];
                               break;
                             case BinOp::div:
                               if (dx) dx[a] += g[i] / yd[b];
                               if (dy) dy[b] -= g[i] * xd[a] / (yd[b] * yd[b]);
                               break;
                           }
                         });
    });
  }
  return out;
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(t.shape()));
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor add(const Tensor& x, const Tensor& y) { return binary(x, y, BinOp::add); }
Tensor sub(const Tensor& x, const Tensor& y) { return binary(x, y, BinOp::sub); }
Tensor mul(const Tensor& x, const Tensor& y) { return binary(x, y, BinOp::mul); }
Tensor div(const Tensor& x, const Tensor& y) { return binary(x, y, BinOp::div); }

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& x) {
  return unary(x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return 0.5 / y; });
}

Tensor neg(const Tensor& x) {
  return unary(x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return stable_sigmoid(v); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return v * factor; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const bool ga = tracks(a), gb = tracks(b);
  Tensor out = make_out({m, n}, ga || gb);
  kernels::parallel::matmul(a.data(), b.data(), out.mutable_data(), m, k, n);
  if (out.requires_grad()) {
    auto ai = a.impl();
    auto bi = b.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [ai, bi, oi, ga, gb, m, k, n] {
      if (ga) kernels::parallel::matmul_grad_a(oi->grad, bi->data, ai->grad, m, k, n);
      if (gb) kernels::parallel::matmul_grad_b(ai->data, oi->grad, bi->grad, m, k, n);
    });
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor out = make_out({c, r}, tracks(x));
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) os[j * r + i] = xs[i * c + j];
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, r, c] {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) xi->grad[i * c + j] += oi->grad[j * r + i];
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  Tensor out = make_out(std::move(shape), tracks(x));
  std::copy(x.values().begin(), x.values().end(), out.mutable_data().begin());
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi] {
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.rank() != first.size()) {
      throw DimensionError("concat rank mismatch: " + shape_str(first) + " vs " +
                           shape_str(p.shape()));
    }
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && p.dim(d) != first[d]) {
        throw DimensionError("concat shape mismatch: " + shape_str(first) + " vs " +
                             shape_str(p.shape()));
      }
    }
    shape[axis] += p.dim(axis);
    needs = needs || tracks(p);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_row = shape[axis] * inner;
  Tensor out = make_out(shape, needs);
  auto os = out.mutable_data();
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    const auto& ps = p.values();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(ps.begin() + static_cast<long>(o * chunk), chunk,
                  os.begin() + static_cast<long>(o * out_row + offset));
    offsets.push_back(offset);
    offset += chunk;
  }
  if (out.requires_grad()) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    TensorImpl* oi = out.impl().get();
    record(out, [impls, offsets, oi, outer, out_row] {
      for (std::size_t k = 0; k < impls.size(); ++k) {
        auto& pi = *impls[k];
        if (!pi.requires_grad) continue;
        const std::size_t chunk = pi.data.size() / outer;
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < chunk; ++i)
            pi.grad[o * chunk + i] += oi->grad[o * out_row + offsets[k] + i];
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || length == 0 || start + length > x.dim(axis)) {
    throw DimensionError("slice [" + std::to_string(start) + ", +" + std::to_string(length) +
                         ") on axis " + std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t in_row = x.dim(axis) * inner;
  const std::size_t chunk = length * inner;
  const std::size_t skip = start * inner;
  Tensor out = make_out(shape, tracks(x));
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(xs.begin() + static_cast<long>(o * in_row + skip), chunk,
                os.begin() + static_cast<long>(o * chunk));
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, outer, in_row, chunk, skip] {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < chunk; ++i)
          xi->grad[o * in_row + skip + i] += oi->grad[o * chunk + i];
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  require_rank(table, 2, "gather_rows");
  if (ids.empty()) throw ContractError("gather_rows with no ids");
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  for (std::size_t id : ids) {
    if (id >= vocab) {
      throw VocabularyError("id " + std::to_string(id) + " outside table of " +
                            std::to_string(vocab) + " rows");
    }
  }
  Tensor out = make_out({ids.size(), width}, tracks(table));
  auto os = out.mutable_data();
  for (std::size_t r = 0; r < ids.size(); ++r)
    std::copy_n(table.values().begin() + static_cast<long>(ids[r] * width), width,
                os.begin() + static_cast<long>(r * width));
  if (out.requires_grad()) {
    auto ti = table.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [ti, oi, ids, width] {
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
          ti->grad[ids[r] * width + c] += oi->grad[r * width + c];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  Tensor out = make_out({1}, tracks(x));
  double s = 0.0;
  for (double v : x.values()) s += v;
  out.mutable_data()[0] = s;
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi] {
      const double g = oi->grad[0];
      for (double& d : xi->grad) d += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("sum_axis: axis out of range");
  Shape shape;
  for (std::size_t d = 0; d < x.rank(); ++d)
    if (d != axis) shape.push_back(x.dim(d));
  if (shape.empty()) shape.push_back(1);
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t len = x.dim(axis);
  Tensor out = make_out(shape, tracks(x));
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t a = 0; a < len; ++a)
      for (std::size_t i = 0; i < inner; ++i) os[o * inner + i] += xs[(o * len + a) * inner + i];
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, outer, len, inner] {
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t a = 0; a < len; ++a)
          for (std::size_t i = 0; i < inner; ++i)
            xi->grad[(o * len + a) * inner + i] += oi->grad[o * inner + i];
    });
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("softmax: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t len = x.dim(axis);
  Tensor out = make_out(x.shape(), tracks(x));
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      auto at = [&](std::size_t a) { return (o * len + a) * inner + i; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < len; ++a) mx = std::max(mx, xs[at(a)]);
      double z = 0.0;
      for (std::size_t a = 0; a < len; ++a) {
        os[at(a)] = std::exp(xs[at(a)] - mx);
        z += os[at(a)];
      }
      for (std::size_t a = 0; a < len; ++a) os[at(a)] /= z;
    }
  }
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, outer, len, inner] {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          auto at = [&](std::size_t a) { return (o * len + a) * inner + i; };
          double dot = 0.0;
          for (std::size_t a = 0; a < len; ++a) dot += oi->grad[at(a)] * oi->data[at(a)];
          for (std::size_t a = 0; a < len; ++a)
            xi->grad[at(a)] += oi->data[at(a)] * (oi->grad[at(a)] - dot);
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.bernoulli(1.0 - rate) ? keep_scale : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, Padding padding) {
  require_rank(x, 2, "conv1d input");
  require_rank(kernel, 3, "conv1d kernel");
  if (stride < 1) throw ContractError("conv1d: stride must be >= 1");
  if (kernel.dim(1) != x.dim(1)) {
    throw DimensionError("conv1d: input " + shape_str(x.shape()) + " vs kernel " +
                         shape_str(kernel.shape()));
  }
  kernels::Conv1dGeom g{x.dim(0), x.dim(1), 0, kernel.dim(2), kernel.dim(0), stride, 0};
  if (padding == Padding::same) {
    auto plan = kernels::same_padding(g.in_len, g.width, stride);
    g.out_len = plan.out;
    g.pad_left = plan.before;
  } else {
    if (g.width > g.in_len) {
      throw DimensionError("conv1d: kernel width " + std::to_string(g.width) +
                           " wider than padded input length " + std::to_string(g.in_len));
    }
    g.out_len = (g.in_len - g.width) / stride + 1;
  }
  const bool gx = tracks(x), gk = tracks(kernel);
  Tensor out = make_out({g.out_len, g.out_ch}, gx || gk);
  kernels::parallel::conv1d(x.data(), kernel.data(), out.mutable_data(), g);
  if (out.requires_grad()) {
    auto xi = x.impl();
    auto ki = kernel.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, ki, oi, g, gx, gk] {
      if (gx) kernels::parallel::conv1d_grad_input(oi->grad, ki->data, xi->grad, g);
      if (gk) kernels::parallel::conv1d_grad_kernel(xi->data, oi->grad, ki->grad, g);
    });
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride_h,
              std::size_t stride_w) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride_h < 1 || stride_w < 1) throw ContractError("conv2d: strides must be >= 1");
  if (kernel.dim(2) != x.dim(2)) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) + " vs kernel " +
                         shape_str(kernel.shape()));
  }
  auto ph = kernels::same_padding(x.dim(0), kernel.dim(0), stride_h);
  auto pw = kernels::same_padding(x.dim(1), kernel.dim(1), stride_w);
  kernels::Conv2dGeom g{x.dim(0),      x.dim(1), x.dim(2), ph.out,   pw.out,    kernel.dim(3),
                        kernel.dim(0), kernel.dim(1), stride_h, stride_w, ph.before, pw.before};
  const bool gx = tracks(x), gk = tracks(kernel);
  Tensor out = make_out({g.out_h, g.out_w, g.out_ch}, gx || gk);
  kernels::parallel::conv2d(x.data(), kernel.data(), out.mutable_data(), g);
  if (out.requires_grad()) {
    auto xi = x.impl();
    auto ki = kernel.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, ki, oi, g, gx, gk] {
      if (gx) kernels::parallel::conv2d_grad_input(oi->grad, ki->data, xi->grad, g);
      if (gk) kernels::parallel::conv2d_grad_kernel(xi->data, oi->grad, ki->grad, g);
    });
  }
  return out;
}

Tensor max_pool1d(const Tensor& x, std::size_t width, std::size_t stride) {
  require_rank(x, 2, "max_pool1d");
  if (width < 1 || stride < 1) throw ContractError("max_pool1d: width and stride must be >= 1");
  const std::size_t len = x.dim(0), ch = x.dim(1);
  auto plan = kernels::same_padding(len, width, stride);
  Tensor out = make_out({plan.out, ch}, tracks(x));
  std::vector<std::size_t> argmax(plan.out * ch);
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t t = 0; t < plan.out; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_i = 0;
      for (std::size_t w = 0; w < width; ++w) {
        long u = static_cast<long>(t * stride + w) - static_cast<long>(plan.before);
        if (u < 0 || u >= static_cast<long>(len)) continue;
        const double v = xs[static_cast<std::size_t>(u) * ch + c];
        if (v > best) {
          best = v;
          best_i = static_cast<std::size_t>(u) * ch + c;
        }
      }
      os[t * ch + c] = best;
      argmax[t * ch + c] = best_i;
    }
  }
  if (out.requires_grad()) {
    auto xi = x.impl();
    TensorImpl* oi = out.impl().get();
    record(out, [xi, oi, argmax = std::move(argmax)] {
      for (std::size_t i = 0; i < argmax.size(); ++i) xi->grad[argmax[i]] += oi->grad[i];
    });
  }
  return out;
}

}  // namespace ppg2mel::num
