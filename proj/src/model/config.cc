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

#include "ppg2mel/model/config.h"

#include <fstream>
#include <set>

#include "ppg2mel/model/json_reader.h"
#include "ppg2mel/num/errors.h"

namespace ppg2mel::model {

using nlohmann::json;

std::size_t SystemConfig::encoder_width() const {
  return encoder == EncoderKind::cbhg ? 2 * widths.encoder_gru : 2 * widths.taco2_lstm;
}

std::size_t SystemConfig::augmented_width() const {
  return encoder_width() + (use_mel_ref ? widths.mel_ref_gru : 0) +
         (use_phone_ref ? widths.phone_ref_gru : 0);
}

double SystemConfig::len_ratio() const { return static_cast<double>(reduction_factor) / 3.0; }

std::string system_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::baseline: return "baseline";
    case SystemKind::s1: return "s1";
    case SystemKind::s2: return "s2";
    case SystemKind::s3: return "s3";
  }
  return "?";
}

SystemKind parse_system(const std::string& name) {
  if (name == "baseline") return SystemKind::baseline;
  if (name == "s1") return SystemKind::s1;
  if (name == "s2") return SystemKind::s2;
  if (name == "s3") return SystemKind::s3;
  throw ConfigError("unknown system '" + name + "' (expected baseline, s1, s2 or s3)");
}

Scale parse_scale(const std::string& name) {
  if (name == "full") return Scale::full;
  if (name == "desk") return Scale::desk;
  if (name == "micro") return Scale::micro;
  throw ConfigError("unknown scale '" + name + "' (expected full, desk or micro)");
}

namespace {
Widths scaled_widths(Scale scale) {
  Widths w;
  if (scale == Scale::full) return w;
  if (scale == Scale::desk) {
    w.ppg_prenet = 64;
    w.cbhg_bank_k = 8;
    w.cbhg_channels = 32;
    w.encoder_gru = 32;
    w.taco2_channels = 64;
    w.taco2_lstm = 32;
    w.mel_ref_channels = {8, 8, 16, 16, 16, 16};
    w.phone_embedding = 32;
    w.phone_ref_channels = {8, 8, 16, 16, 16, 16};
    w.phone_ref_gru = 32;
    w.decoder_prenet = 64;
    w.attention_lstm = 96;
    w.decoder_lstm = 96;
    w.gmm_hidden = 32;
    w.lsa_dim = 32;
    w.lsa_filters = 8;
    w.postnet_channels = 64;
    return w;
  }
  // Every layer width becomes 8; layer counts, kernels and windows stay.
  const std::size_t n = 8;
  w.ppg_prenet = n;
  w.cbhg_channels = n;
  w.encoder_gru = n;
  w.taco2_channels = n;
  w.taco2_lstm = n;
  w.mel_ref_channels = {n, n, n, n, n, n};
  w.mel_ref_gru = 4;
  w.phone_embedding = n;
  w.phone_ref_channels = {n, n, n, n, n, n};
  w.phone_ref_gru = n;
  w.decoder_prenet = n;
  w.attention_lstm = n;
  w.decoder_lstm = n;
  w.gmm_components = 2;
  w.gmm_hidden = n;
  w.lsa_dim = n;
  w.lsa_filters = n;
  w.postnet_channels = n;
  return w;
}
}  // namespace

SystemConfig preset(SystemKind kind, Scale scale) {
  SystemConfig c;
  c.name = system_name(kind);
  c.widths = scaled_widths(scale);
  switch (kind) {
    case SystemKind::baseline:
      c.encoder = EncoderKind::taco2;
      c.attention = AttentionKind::lsa_windowed;
      break;
    case SystemKind::s1: break;
    case SystemKind::s3: c.use_phone_ref = true; [[fallthrough]];
    case SystemKind::s2: c.use_mel_ref = true; break;
  }
  return c;
}

void validate(const SystemConfig& c) {
  const bool baseline = c.encoder == EncoderKind::taco2 && c.attention == AttentionKind::lsa_windowed &&
                        !c.use_mel_ref && !c.use_phone_ref;
  const bool proposed = c.encoder == EncoderKind::cbhg && c.attention == AttentionKind::gmm &&
                        (c.use_mel_ref || !c.use_phone_ref);
  if (!baseline && !proposed) {
    throw ConfigError("encoder/attention/reference switches do not match baseline, s1, s2 or s3");
  }
  const Widths& w = c.widths;
  for (std::size_t v : {c.reduction_factor, c.ppg_dim, c.mel_dim, c.n_phonemes, w.ppg_prenet,
                        w.cbhg_bank_k, w.cbhg_channels, w.cbhg_pool_width, w.cbhg_projection_kernel,
                        w.encoder_gru, w.taco2_conv_layers, w.taco2_channels, w.taco2_kernel,
                        w.taco2_lstm, w.mel_ref_gru, w.phone_embedding, w.phone_ref_gru,
                        w.decoder_prenet, w.attention_lstm, w.decoder_lstm, w.gmm_components,
                        w.gmm_hidden, w.lsa_dim, w.lsa_filters, w.lsa_filter_width, w.lsa_window,
                        w.postnet_layers, w.postnet_channels, w.postnet_kernel}) {
    if (v == 0) throw ConfigError("config widths and sizes must be positive");
  }
  if (w.mel_ref_channels.size() != 6 || w.phone_ref_channels.size() != 6) {
    throw ConfigError("mel_ref_channels and phone_ref_channels need six entries");
  }
  for (double d : {c.dropout.ppg_prenet, c.dropout.decoder_prenet, c.dropout.lstm}) {
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("dropout rates must lie in [0, 1)");
  }
}

json to_json(const SystemConfig& c) {
  const Widths& w = c.widths;
  return json{
      {"version", SystemConfig::kVersion},
      {"name", c.name},
      {"encoder", c.encoder == EncoderKind::cbhg ? "cbhg" : "taco2"},
      {"attention", c.attention == AttentionKind::gmm ? "gmm" : "lsa_windowed"},
      {"use_mel_ref", c.use_mel_ref},
      {"use_phone_ref", c.use_phone_ref},
      {"reduction_factor", c.reduction_factor},
      {"ppg_dim", c.ppg_dim},
      {"mel_dim", c.mel_dim},
      {"n_phonemes", c.n_phonemes},
      {"stop_token", c.stop_token},
      {"stop_on_overrun", c.stop_on_overrun},
      {"sigma_form", c.sigma_form == attention::SigmaForm::revised ? "revised" : "draft"},
      {"normalize_context", c.normalize_context},
      {"widths",
       {{"ppg_prenet", w.ppg_prenet},
        {"cbhg_bank_k", w.cbhg_bank_k},
        {"cbhg_channels", w.cbhg_channels},
        {"cbhg_pool_width", w.cbhg_pool_width},
        {"cbhg_projection_kernel", w.cbhg_projection_kernel},
        {"highway_layers", w.highway_layers},
        {"encoder_gru", w.encoder_gru},
        {"taco2_conv_layers", w.taco2_conv_layers},
        {"taco2_channels", w.taco2_channels},
        {"taco2_kernel", w.taco2_kernel},
        {"taco2_lstm", w.taco2_lstm},
        {"mel_ref_channels", w.mel_ref_channels},
        {"mel_ref_gru", w.mel_ref_gru},
        {"phone_embedding", w.phone_embedding},
        {"phone_ref_channels", w.phone_ref_channels},
        {"phone_ref_gru", w.phone_ref_gru},
        {"decoder_prenet", w.decoder_prenet},
        {"attention_lstm", w.attention_lstm},
        {"decoder_lstm", w.decoder_lstm},
        {"gmm_components", w.gmm_components},
        {"gmm_hidden", w.gmm_hidden},
        {"lsa_dim", w.lsa_dim},
        {"lsa_filters", w.lsa_filters},
        {"lsa_filter_width", w.lsa_filter_width},
        {"lsa_window", w.lsa_window},
        {"postnet_layers", w.postnet_layers},
        {"postnet_channels", w.postnet_channels},
        {"postnet_kernel", w.postnet_kernel}}},
      {"dropout",
       {{"ppg_prenet", c.dropout.ppg_prenet},
        {"decoder_prenet", c.dropout.decoder_prenet},
        {"lstm", c.dropout.lstm}}},
  };
}

SystemConfig config_from_json(const json& j) {
  std::vector<std::string> errors;
  SystemConfig c;
  JsonReader top(j, "", errors);

  int version = 0;
  if (!j.is_object() || !j.contains("version")) {
    errors.push_back("version: missing");
  } else if (!j.at("version").is_number_integer() || j.at("version").get<int>() != SystemConfig::kVersion) {
    errors.push_back("version: unsupported (expected " + std::to_string(SystemConfig::kVersion) + ")");
  }
  top.field("version", version);

  // An optional "base" ("s3" or "s3/desk") selects a preset that the other
  // keys then override.
  std::string base;
  top.field("base", base);
  if (!base.empty()) {
    try {
      const auto slash = base.find('/');
      c = preset(parse_system(base.substr(0, slash)),
                 slash == std::string::npos ? Scale::full : parse_scale(base.substr(slash + 1)));
    } catch (const ConfigError& e) {
      errors.push_back(std::string("base: ") + e.what());
    }
  }

  top.field("name", c.name);
  top.choice("encoder", c.encoder, {{"cbhg", EncoderKind::cbhg}, {"taco2", EncoderKind::taco2}});
  top.choice("attention", c.attention,
             {{"gmm", AttentionKind::gmm}, {"lsa_windowed", AttentionKind::lsa_windowed}});
  top.field("use_mel_ref", c.use_mel_ref);
  top.field("use_phone_ref", c.use_phone_ref);
  top.field("reduction_factor", c.reduction_factor);
  top.field("ppg_dim", c.ppg_dim);
  top.field("mel_dim", c.mel_dim);
  top.field("n_phonemes", c.n_phonemes);
  top.field("stop_token", c.stop_token);
  top.field("stop_on_overrun", c.stop_on_overrun);
  top.choice("sigma_form", c.sigma_form,
             {{"revised", attention::SigmaForm::revised}, {"draft", attention::SigmaForm::draft}});
  top.field("normalize_context", c.normalize_context);

  if (const json* wj = top.child("widths")) {
    Widths& w = c.widths;
    JsonReader r(*wj, "widths.", errors);
    r.field("ppg_prenet", w.ppg_prenet);
    r.field("cbhg_bank_k", w.cbhg_bank_k);
    r.field("cbhg_channels", w.cbhg_channels);
    r.field("cbhg_pool_width", w.cbhg_pool_width);
    r.field("cbhg_projection_kernel", w.cbhg_projection_kernel);
    r.field("highway_layers", w.highway_layers);
    r.field("encoder_gru", w.encoder_gru);
    r.field("taco2_conv_layers", w.taco2_conv_layers);
    r.field("taco2_channels", w.taco2_channels);
    r.field("taco2_kernel", w.taco2_kernel);
    r.field("taco2_lstm", w.taco2_lstm);
    r.field("mel_ref_channels", w.mel_ref_channels);
    r.field("mel_ref_gru", w.mel_ref_gru);
    r.field("phone_embedding", w.phone_embedding);
    r.field("phone_ref_channels", w.phone_ref_channels);
    r.field("phone_ref_gru", w.phone_ref_gru);
    r.field("decoder_prenet", w.decoder_prenet);
    r.field("attention_lstm", w.attention_lstm);
    r.field("decoder_lstm", w.decoder_lstm);
    r.field("gmm_components", w.gmm_components);
    r.field("gmm_hidden", w.gmm_hidden);
    r.field("lsa_dim", w.lsa_dim);
    r.field("lsa_filters", w.lsa_filters);
    r.field("lsa_filter_width", w.lsa_filter_width);
    r.field("lsa_window", w.lsa_window);
    r.field("postnet_layers", w.postnet_layers);
    r.field("postnet_channels", w.postnet_channels);
    r.field("postnet_kernel", w.postnet_kernel);
    r.reject_unknown();
  }
  if (const json* dj = top.child("dropout")) {
    JsonReader r(*dj, "dropout.", errors);
    r.field("ppg_prenet", c.dropout.ppg_prenet);
    r.field("decoder_prenet", c.dropout.decoder_prenet);
    r.field("lstm", c.dropout.lstm);
    r.reject_unknown();
  }
  top.reject_unknown();

  if (errors.empty()) {
    try {
      validate(c);
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::string& path, const SystemConfig& config) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << to_json(config).dump(2) << '\n';
}

bool operator==(const SystemConfig& a, const SystemConfig& b) { return to_json(a) == to_json(b); }

}  // namespace ppg2mel::model
