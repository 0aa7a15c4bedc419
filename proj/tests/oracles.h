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

// Direct evaluations used to check the library against independent arithmetic.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ppg2mel/attention/attention.h"

namespace ppg2mel::oracles {

// Mixture weights at positions 0..enc_len-1, one term at a time: hidden
// layer, head, then the unnormalized sum of K Gaussians around mu + delta.
inline std::vector<double> gmm_alpha(const std::vector<double>& s, const std::vector<double>& mu,
                                     const attention::GmmParams& p, std::size_t enc_len,
                                     attention::SigmaForm form) {
  const std::size_t ds = p.w.dim(0), h = p.w.dim(1), k = p.k();
  std::vector<double> hidden(h), head(3 * k);
  for (std::size_t c = 0; c < h; ++c) {
    double z = p.b.values()[c];
    for (std::size_t r = 0; r < ds; ++r) z += s[r] * p.w.values()[r * h + c];
    hidden[c] = std::tanh(z);
  }
  for (std::size_t c = 0; c < 3 * k; ++c) {
    double z = 0.0;
    for (std::size_t r = 0; r < h; ++r) z += hidden[r] * p.v.values()[r * 3 * k + c];
    head[c] = z;
  }
  std::vector<double> alpha(enc_len, 0.0);
  for (std::size_t j = 0; j < enc_len; ++j) {
    for (std::size_t m = 0; m < k; ++m) {
      const double omega = std::exp(head[m]);
      const double mean = mu[m] + std::exp(head[k + m]);
      const double sigma = form == attention::SigmaForm::revised ? std::sqrt(std::exp(-head[2 * k + m]) / 2.0)
                                                      : std::exp(head[2 * k + m]);
      const double d = static_cast<double>(j) - mean;
      alpha[j] += omega * std::exp(-d * d / (2.0 * sigma * sigma));
    }
  }
  return alpha;
}

}  // namespace ppg2mel::oracles
