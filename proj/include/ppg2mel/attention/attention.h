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
#include <filesystem>
#include <utility>
#include <vector>

#include "ppg2mel/num/rng.h"
#include "ppg2mel/num/tensor.h"

namespace ppg2mel::attention {

// ---- GMM attention ----

// Scale parameterization. `revised`: sigma = sqrt(exp(-sigma_hat) / 2).
// `draft`: sigma = exp(sigma_hat).
enum class SigmaForm { revised, draft };

struct GmmParams {
  num::Tensor w;  // [Ds x H]
  num::Tensor b;  // [H]
  num::Tensor v;  // [H x 3K]
  std::size_t k() const { return v.dim(1) / 3; }
};

GmmParams make_gmm_params(std::size_t query_dim, std::size_t hidden, std::size_t k, num::Rng& rng);

struct GmmState {
  num::Tensor mu;  // [1 x K], encoder-position units
  num::Tensor omega, delta, sigma;  // [1 x K] from the step that produced mu
};

// mu = 0: attention starts at the head of the sequence.
GmmState gmm_init_state(std::size_t k);

struct GmmStep {
  num::Tensor alpha;  // [enc_len], unnormalized, strictly positive
  GmmState state;
};

//   [w_hat | d_hat | s_hat] = V tanh(W s + b)
//   omega = exp(w_hat), delta = exp(d_hat), sigma per `form`
//   mu' = mu + delta
//   alpha_j = sum_k omega_k exp(-(j - mu'_k)^2 / (2 sigma_k^2))
// `step` only labels the NumericError raised on non-finite intermediates.
GmmStep gmm_step(const num::Tensor& s, const GmmState& state, std::size_t enc_len,
                 const GmmParams& params, SigmaForm form = SigmaForm::revised,
                 std::size_t step = 0);

// ---- windowed location-sensitive attention ----

struct LsaParams {
  num::Tensor query_w;   // [Ds x A]
  num::Tensor memory_w;  // [De x A]
  num::Tensor loc_conv;  // [width x 2 x F], over (previous, cumulative) weights
  num::Tensor loc_w;     // [F x A]
  num::Tensor bias;      // [A]
  num::Tensor v;         // [A]
  std::size_t window = 20;
};

LsaParams make_lsa_params(std::size_t query_dim, std::size_t memory_dim, std::size_t attn_dim,
                          std::size_t filters, std::size_t filter_width, std::size_t window,
                          num::Rng& rng);

// Half-open [lo, hi) window: centre round(step * len_ratio) clamped to
// [0, enc_len - 1], covering centre - window/2 ... centre + (window - 1)/2,
// cut to the sequence.
std::pair<std::size_t, std::size_t> lsa_window(std::size_t step, double len_ratio,
                                               std::size_t enc_len, std::size_t window);

struct LsaStep {
  num::Tensor alpha;       // [enc_len], zero outside the window, sums to 1
  num::Tensor cumulative;  // [enc_len]
};

// processed_memory = memory @ memory_w, computed once per sequence.
LsaStep lsa_windowed_step(const num::Tensor& s, const num::Tensor& processed_memory,
                          const num::Tensor& prev_alpha, const num::Tensor& cumulative,
                          std::size_t step, double len_ratio, const LsaParams& params);

// One-hot on position 0, the usual starting alignment.
num::Tensor lsa_initial_alpha(std::size_t enc_len);

// ---- shared helpers ----

// context [1 x D] = alpha^T memory. With `normalize` alpha is first divided by
// its sum; GMM weights are used as is by default.
num::Tensor attend(const num::Tensor& alpha, const num::Tensor& memory, bool normalize = false);

// Mean over decoder steps of |E[position] - oracle_i| / enc_len, with each row
// renormalized to sum to 1. A row with no finite positive mass scores 1.
double alignment_error(const num::Tensor& alpha_matrix, const std::vector<double>& oracle);

// Expected encoder position of decoder step i: the PPG frame whose mel-time
// centre matches the centre of the r frames the step emits.
std::vector<double> decoder_oracle(std::size_t steps, std::size_t r, std::size_t enc_len,
                                   std::size_t skip = 3);

// ---- export ----
void write_alignment_csv(const std::filesystem::path& path, const num::Tensor& alpha_matrix);
// Binary 8-bit PGM, width = encoder steps, height = decoder steps, values
// scaled linearly from [min, max] to [0, 255].
void write_alignment_pgm(const std::filesystem::path& path, const num::Tensor& alpha_matrix);

}  // namespace ppg2mel::attention
