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

// Closed-form widths and parameter counts of the conversion model at the
// published layer sizes, written out independently of the model code.

#include <cstddef>
#include <map>
#include <string>

#include "ppg2mel/model/config.h"

namespace ppg2mel::closed_form {

constexpr std::size_t kPpg = 87, kMel = 80, kPhones = 12, kR = 2;
constexpr std::size_t kPrenet = 128, kBankK = 16, kBankCh = 128, kGru = 128;
constexpr std::size_t kTacoCh = 256, kTacoK = 5, kTacoLstm = 128;
constexpr std::size_t kMelRefGru = 4, kPhoneEmb = 128, kPhoneRefGru = 128;
constexpr std::size_t kDecPrenet = 300, kAttLstm = 300, kDecLstm = 300;
constexpr std::size_t kGmmK = 10, kGmmHidden = 128;
constexpr std::size_t kLsaDim = 128, kLsaFilters = 32, kLsaWidth = 31;
constexpr std::size_t kPostCh = 512, kPostK = 5, kPostLayers = 5;

inline std::size_t dense(std::size_t in, std::size_t out) { return in * out + out; }
inline std::size_t conv1(std::size_t k, std::size_t in, std::size_t out) { return k * in * out + out; }
inline std::size_t conv2(std::size_t in, std::size_t out) { return 9 * in * out + out; }
inline std::size_t gru(std::size_t in, std::size_t h) { return in * 3 * h + h * 3 * h + 6 * h; }
inline std::size_t lstm(std::size_t in, std::size_t h) { return in * 4 * h + h * 4 * h + 4 * h; }

// Conv2D channels [32, 32, 64, 64, 128, 128]; frequency 80 (or 128) halves
// six times to 2, so each bi-GRU reads 2 * 128 = 256 features per step.
inline std::size_t ref_convs() {
  return conv2(1, 32) + conv2(32, 32) + conv2(32, 64) + conv2(64, 64) + conv2(64, 128) +
         conv2(128, 128);
}

inline std::size_t encoder_width(model::SystemKind k) {
  return k == model::SystemKind::baseline ? 2 * kTacoLstm : 2 * kGru;
}

inline std::size_t augmented_width(model::SystemKind k) {
  std::size_t w = encoder_width(k);
  if (k == model::SystemKind::s2 || k == model::SystemKind::s3) w += kMelRefGru;
  if (k == model::SystemKind::s3) w += kPhoneRefGru;
  return w;
}

inline std::map<std::string, std::size_t> group_counts(model::SystemKind k) {
  using model::SystemKind;
  std::map<std::string, std::size_t> g;
  const std::size_t aug = augmented_width(k);
  g["prenet"] = dense(kPpg, kPrenet) + dense(kPrenet, kPrenet);
  if (k == SystemKind::baseline) {
    g["encoder"] = conv1(kTacoK, kPrenet, kTacoCh) + 2 * conv1(kTacoK, kTacoCh, kTacoCh) +
                   2 * lstm(kTacoCh, kTacoLstm);
    g["attention"] = kAttLstm * kLsaDim + aug * kLsaDim + kLsaWidth * 2 * kLsaFilters +
                     kLsaFilters * kLsaDim + kLsaDim + kLsaDim;
  } else {
    std::size_t bank = 0;
    for (std::size_t w = 1; w <= kBankK; ++w) bank += conv1(w, kPrenet, kBankCh);
    g["encoder"] = bank + conv1(3, kBankK * kBankCh, kBankCh) + conv1(3, kBankCh, kPrenet) +
                   4 * 2 * dense(kPrenet, kPrenet) + 2 * gru(kPrenet, kGru);
    g["attention"] = dense(kAttLstm, kGmmHidden) + kGmmHidden * 3 * kGmmK;
  }
  if (k == SystemKind::s2 || k == SystemKind::s3) {
    g["mel_ref"] = ref_convs() + 2 * gru(256, kMelRefGru);
  }
  if (k == SystemKind::s3) {
    g["phone_ref"] = kPhones * kPhoneEmb + ref_convs() + 2 * gru(256, kPhoneRefGru);
  }
  g["decoder"] = dense(kMel, kDecPrenet) + dense(kDecPrenet, kDecPrenet) +
                 lstm(kDecPrenet + aug, kAttLstm) + lstm(kAttLstm + aug, kDecLstm) +
                 dense(kDecLstm + aug, kR * kMel) + dense(kDecLstm + aug, 1);
  g["postnet"] = conv1(kPostK, kMel, kPostCh) + (kPostLayers - 2) * conv1(kPostK, kPostCh, kPostCh) +
                 conv1(kPostK, kPostCh, kMel);
  return g;
}

inline std::size_t param_count(model::SystemKind k) {
  std::size_t n = 0;
  for (const auto& [name, c] : group_counts(k)) n += c;
  return n;
}

// Boundary widths for a forward pass over `t_ppg` PPG frames and a `t_ref`
// frame reference mel.
inline std::map<std::string, std::size_t> widths(model::SystemKind k, std::size_t t_ppg,
                                                 std::size_t t_ref) {
  using model::SystemKind;
  std::map<std::string, std::size_t> w{
      {"ppg_prenet", kPrenet},       {"encoder", encoder_width(k)},
      {"augmented", augmented_width(k)}, {"decoder_prenet", kDecPrenet},
      {"attention_lstm", kAttLstm},  {"attention_weights", t_ppg},
      {"context", augmented_width(k)}, {"decoder_lstm", kDecLstm},
      {"projection", kR * kMel},     {"postnet_hidden", kPostCh},
      {"mel_after", kMel}};
  if (k != SystemKind::baseline) w["gmm_components"] = kGmmK;
  if (k == SystemKind::s2 || k == SystemKind::s3) {
    w["mel_ref"] = kMelRefGru;
    w["mel_ref_steps"] = (t_ref + 2) / 3;
  }
  if (k == SystemKind::s3) w["phone_ref"] = kPhoneRefGru;
  return w;
}

}  // namespace ppg2mel::closed_form
