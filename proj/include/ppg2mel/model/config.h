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
#include <string>
#include <vector>

#include <json.hpp>

#include "ppg2mel/attention/attention.h"

namespace ppg2mel::model {

enum class EncoderKind { cbhg, taco2 };
enum class AttentionKind { gmm, lsa_windowed };
enum class SystemKind { baseline, s1, s2, s3 };
// full: the published layer sizes. desk: narrow enough to train on one core.
// micro: widths 8, K=2, for end-to-end finite differences.
enum class Scale { full, desk, micro };

struct Widths {
  std::size_t ppg_prenet = 128;
  std::size_t cbhg_bank_k = 16;
  std::size_t cbhg_channels = 128;
  std::size_t cbhg_pool_width = 2;
  std::size_t cbhg_projection_kernel = 3;
  std::size_t highway_layers = 4;
  std::size_t encoder_gru = 128;  // per direction
  std::size_t taco2_conv_layers = 3;
  std::size_t taco2_channels = 256;
  std::size_t taco2_kernel = 5;
  std::size_t taco2_lstm = 128;  // per direction
  std::vector<std::size_t> mel_ref_channels{32, 32, 64, 64, 128, 128};
  std::size_t mel_ref_gru = 4;
  std::size_t phone_embedding = 128;
  std::vector<std::size_t> phone_ref_channels{32, 32, 64, 64, 128, 128};
  std::size_t phone_ref_gru = 128;
  std::size_t decoder_prenet = 300;
  std::size_t attention_lstm = 300;
  std::size_t decoder_lstm = 300;
  std::size_t gmm_components = 10;
  std::size_t gmm_hidden = 128;
  std::size_t lsa_dim = 128;
  std::size_t lsa_filters = 32;
  std::size_t lsa_filter_width = 31;
  std::size_t lsa_window = 20;
  std::size_t postnet_layers = 5;
  std::size_t postnet_channels = 512;
  std::size_t postnet_kernel = 5;
};

struct Dropouts {
  double ppg_prenet = 0.5;
  double decoder_prenet = 0.5;
  double lstm = 0.1;
};

struct SystemConfig {
  static constexpr int kVersion = 1;

  std::string name = "s1";
  EncoderKind encoder = EncoderKind::cbhg;
  AttentionKind attention = AttentionKind::gmm;
  bool use_mel_ref = false;
  bool use_phone_ref = false;
  std::size_t reduction_factor = 2;
  std::size_t ppg_dim = 87;
  std::size_t mel_dim = 80;
  std::size_t n_phonemes = 12;
  bool stop_token = true;
  // Free-running GMM decoding also ends once every mean is past the input.
  bool stop_on_overrun = true;
  attention::SigmaForm sigma_form = attention::SigmaForm::revised;
  bool normalize_context = false;
  Widths widths;
  Dropouts dropout;

  std::size_t encoder_width() const;
  std::size_t augmented_width() const;
  // Encoder steps advanced per decoder step, r / skip.
  double len_ratio() const;
};

SystemConfig preset(SystemKind kind, Scale scale = Scale::full);
std::string system_name(SystemKind kind);
// ConfigError for anything but baseline, s1, s2, s3.
SystemKind parse_system(const std::string& name);
Scale parse_scale(const std::string& name);

// Throws ConfigError if the ablation switches do not describe one of the
// four systems or a width is zero.
void validate(const SystemConfig& config);

nlohmann::json to_json(const SystemConfig& config);
// Unknown keys, wrong types and a missing or unsupported version raise a
// ConfigError that lists every offending key.
SystemConfig config_from_json(const nlohmann::json& j);
SystemConfig load_config(const std::string& path);
void save_config(const std::string& path, const SystemConfig& config);

bool operator==(const SystemConfig& a, const SystemConfig& b);

}  // namespace ppg2mel::model
