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

#include "ppg2mel/attention/attention.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/init.h"
#include "ppg2mel/num/ops.h"

namespace ppg2mel::attention {

using namespace num;

namespace {
Tensor as_row(const Tensor& x) {
  return x.rank() == 1 ? reshape(x, {1, x.dim(0)}) : x;
}

void require_finite(const Tensor& t, const char* what, std::size_t step) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string("gmm attention: non-finite ") + what, step);
  }
}

Tensor positions(std::size_t n) {
  Tensor p = Tensor::zeros({n, 1});
  auto d = p.mutable_data();
  for (std::size_t j = 0; j < n; ++j) d[j] = static_cast<double>(j);
  return p;
}
}  // namespace

GmmParams make_gmm_params(std::size_t query_dim, std::size_t hidden, std::size_t k, Rng& rng) {
  return {glorot_uniform({query_dim, hidden}, query_dim, hidden, rng), zeros_param({hidden}),
          glorot_uniform({hidden, 3 * k}, hidden, 3 * k, rng)};
}

GmmState gmm_init_state(std::size_t k) {
  if (k < 1) throw ContractError("gmm_init_state: K must be >= 1");
  return {Tensor::zeros({1, k}), Tensor::zeros({1, k}), Tensor::zeros({1, k}),
          Tensor::zeros({1, k})};
}

GmmStep gmm_step(const Tensor& s, const GmmState& state, std::size_t enc_len,
                 const GmmParams& params, SigmaForm form, std::size_t step) {
  if (enc_len < 1) throw ContractError("gmm_step: enc_len must be >= 1");
  const std::size_t k = params.k();
  if (params.v.dim(1) != 3 * k) throw DimensionError("gmm head width must be 3K");
  if (state.mu.numel() != k) {
    throw DimensionError("gmm state has " + std::to_string(state.mu.numel()) +
                         " means, params have K=" + std::to_string(k));
  }
  require_finite(state.mu, "mean", step);

  Tensor hidden = tanh(add(matmul(as_row(s), params.w), params.b));
  Tensor head = matmul(hidden, params.v);  // [1 x 3K]
  Tensor omega = exp(slice(head, 1, 0, k));
  Tensor delta = exp(slice(head, 1, k, k));
  Tensor s_hat = slice(head, 1, 2 * k, k);
  Tensor sigma = form == SigmaForm::revised ? sqrt(scale(exp(neg(s_hat)), 0.5)) : exp(s_hat);
  Tensor mu = add(reshape(state.mu, {1, k}), delta);
  require_finite(omega, "mixture weight", step);
  require_finite(delta, "mean increment", step);
  require_finite(sigma, "scale", step);

  Tensor dist = sub(positions(enc_len), mu);               // [enc_len x K]
  Tensor two_var = scale(square(sigma), 2.0);             // [1 x K]
  Tensor terms = mul(exp(neg(div(square(dist), two_var))), omega);
  Tensor alpha = sum_axis(terms, 1);                      // [enc_len]
  require_finite(alpha, "attention weight", step);
  return {alpha, {mu, omega, delta, sigma}};
}

LsaParams make_lsa_params(std::size_t query_dim, std::size_t memory_dim, std::size_t attn_dim,
                          std::size_t filters, std::size_t filter_width, std::size_t window,
                          Rng& rng) {
  if (window < 1) throw ContractError("lsa window must be >= 1");
  LsaParams p;
  p.query_w = glorot_uniform({query_dim, attn_dim}, query_dim, attn_dim, rng);
  p.memory_w = glorot_uniform({memory_dim, attn_dim}, memory_dim, attn_dim, rng);
  p.loc_conv = glorot_uniform({filter_width, 2, filters}, 2 * filter_width, filters, rng);
  p.loc_w = glorot_uniform({filters, attn_dim}, filters, attn_dim, rng);
  p.bias = zeros_param({attn_dim});
  p.v = glorot_uniform({attn_dim}, attn_dim, 1, rng);
  p.window = window;
  return p;
}

std::pair<std::size_t, std::size_t> lsa_window(std::size_t step, double len_ratio,
                                               std::size_t enc_len, std::size_t window) {
  if (enc_len < 1 || window < 1) throw ContractError("lsa_window: empty sequence or window");
  const double raw = std::round(static_cast<double>(step) * len_ratio);
  const auto centre = static_cast<long>(std::clamp(raw, 0.0, static_cast<double>(enc_len - 1)));
  const long lo = std::max(0L, centre - static_cast<long>(window / 2));
  const long hi = std::min(static_cast<long>(enc_len), centre + static_cast<long>((window - 1) / 2) + 1);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

Tensor lsa_initial_alpha(std::size_t enc_len) {
  Tensor a = Tensor::zeros({enc_len});
  a.mutable_data()[0] = 1.0;
  return a;
}

LsaStep lsa_windowed_step(const Tensor& s, const Tensor& processed_memory,
                          const Tensor& prev_alpha, const Tensor& cumulative, std::size_t step,
                          double len_ratio, const LsaParams& params) {
  const std::size_t enc_len = processed_memory.dim(0);
  if (prev_alpha.numel() != enc_len || cumulative.numel() != enc_len) {
    throw DimensionError("lsa: attention history length does not match memory length");
  }
  const auto [lo, hi] = lsa_window(step, len_ratio, enc_len, params.window);
  const std::size_t width = hi - lo;

  Tensor query = matmul(as_row(s), params.query_w);  // [1 x A]
  Tensor history = concat({reshape(prev_alpha, {enc_len, 1}), reshape(cumulative, {enc_len, 1})}, 1);
  Tensor loc = conv1d(history, params.loc_conv, 1, Padding::same);  // [T x F]
  Tensor loc_win = matmul(slice(loc, 0, lo, width), params.loc_w);
  Tensor mem_win = slice(processed_memory, 0, lo, width);
  Tensor energy = tanh(add(add(add(mem_win, loc_win), query), params.bias));  // [W x A]
  Tensor scores = matmul(energy, reshape(params.v, {params.v.numel(), 1}));   // [W x 1]
  Tensor inside = softmax(reshape(scores, {width}), 0);

  std::vector<Tensor> parts;
  if (lo > 0) parts.push_back(Tensor::zeros({lo}));
  parts.push_back(inside);
  if (hi < enc_len) parts.push_back(Tensor::zeros({enc_len - hi}));
  Tensor alpha = parts.size() == 1 ? inside : concat(parts, 0);
  return {alpha, add(reshape(cumulative, {enc_len}), alpha)};
}

Tensor attend(const Tensor& alpha, const Tensor& memory, bool normalize) {
  Tensor row = reshape(alpha, {1, alpha.numel()});
  if (normalize) row = div(row, sum(row));
  return matmul(row, memory);
}

double alignment_error(const Tensor& alpha_matrix, const std::vector<double>& oracle) {
  if (alpha_matrix.rank() != 2 || alpha_matrix.dim(0) != oracle.size()) {
    throw DimensionError("alignment_error: " + shape_str(alpha_matrix.shape()) + " vs " +
                         std::to_string(oracle.size()) + " oracle positions");
  }
  const std::size_t steps = alpha_matrix.dim(0), enc_len = alpha_matrix.dim(1);
  const auto& a = alpha_matrix.values();
  double total = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    double mass = 0.0, first = 0.0;
    for (std::size_t j = 0; j < enc_len; ++j) {
      mass += a[i * enc_len + j];
      first += static_cast<double>(j) * a[i * enc_len + j];
    }
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      total += 1.0;  // all weight underflowed or blew up: count as maximally wrong
      continue;
    }
    total += std::abs(first / mass - oracle[i]) / static_cast<double>(enc_len);
  }
  return total / static_cast<double>(steps);
}

std::vector<double> decoder_oracle(std::size_t steps, std::size_t r, std::size_t enc_len,
                                   std::size_t skip) {
  std::vector<double> out(steps);
  const double mid = (static_cast<double>(skip) - 1.0) / 2.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double mel_centre = static_cast<double>(i * r) + (static_cast<double>(r) - 1.0) / 2.0;
    out[i] = std::clamp((mel_centre - mid) / static_cast<double>(skip), 0.0,
                        static_cast<double>(enc_len - 1));
  }
  return out;
}

void write_alignment_csv(const std::filesystem::path& path, const Tensor& alpha_matrix) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  const std::size_t cols = alpha_matrix.dim(1);
  const auto& a = alpha_matrix.values();
  for (std::size_t i = 0; i < alpha_matrix.dim(0); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out << (j ? "," : "") << a[i * cols + j];
    out << '\n';
  }
}

void write_alignment_pgm(const std::filesystem::path& path, const Tensor& alpha_matrix) {
  if (alpha_matrix.rank() != 2) throw DimensionError("alignment image needs a matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto& a = alpha_matrix.values();
  const auto [lo_it, hi_it] = std::minmax_element(a.begin(), a.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  out << "P5\n" << alpha_matrix.dim(1) << ' ' << alpha_matrix.dim(0) << "\n255\n";
  for (double v : a) {
    const double scaled = span > 0.0 ? (v - lo) / span * 255.0 : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
}

}  // namespace ppg2mel::attention
