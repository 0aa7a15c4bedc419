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

#include "ppg2mel/model/model.h"

#include <algorithm>
#include <cmath>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/init.h"
#include "ppg2mel/num/ops.h"
#include "ppg2mel/num/recurrent.h"

namespace ppg2mel::model {

using namespace num;

namespace {
// Stream ids for parameter initialization, one per module.
enum Stream : std::uint64_t { kPrenet = 1, kEncoder, kMelRef, kPhoneRef, kDecoder, kAttention, kPostnet };

std::string idx(const std::string& prefix, std::size_t i) { return prefix + "." + std::to_string(i); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

// Frequency extent after `layers` stride-2 same-padded convolutions.
std::size_t halved(std::size_t width, std::size_t layers) {
  for (std::size_t i = 0; i < layers; ++i) width = (width + 1) / 2;
  return width;
}

Tensor step_rows(const std::vector<Tensor>& rows) { return rows.size() == 1 ? rows[0] : concat(rows, 0); }

Tensor zero_beyond(const Tensor& x, std::size_t valid) {
  if (valid == 0 || valid >= x.dim(0)) return x;
  Tensor mask = Tensor::zeros({x.dim(0), 1});
  auto m = mask.mutable_data();
  for (std::size_t t = 0; t < valid; ++t) m[t] = 1.0;
  return mul(x, mask);
}

void require_finite(const Tensor& t, const char* what, std::size_t step) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string("decoder: non-finite ") + what, step);
  }
}
}  // namespace

Model::Model(SystemConfig config, std::uint64_t seed) : config_(std::move(config)) {
  validate(config_);
  const Widths& w = config_.widths;
  const std::size_t mel = config_.mel_dim;

  auto dense = [&](const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    add_param(name + ".w", glorot_uniform({in, out}, in, out, rng));
    add_param(name + ".b", zeros_param({out}));
  };
  auto conv1 = [&](const std::string& name, std::size_t k, std::size_t in, std::size_t out, Rng& rng) {
    add_param(name + ".w", glorot_uniform({k, in, out}, k * in, k * out, rng));
    add_param(name + ".b", zeros_param({out}));
  };
  auto conv2 = [&](const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    add_param(name + ".w", glorot_uniform({3, 3, in, out}, 9 * in, 9 * out, rng));
    add_param(name + ".b", zeros_param({out}));
  };
  auto gru = [&](const std::string& name, std::size_t in, std::size_t h, Rng& rng) {
    add_param(name + ".w_ih", glorot_uniform({in, 3 * h}, in, 3 * h, rng));
    add_param(name + ".w_hh", glorot_uniform({h, 3 * h}, h, 3 * h, rng));
    add_param(name + ".b_ih", zeros_param({3 * h}));
    add_param(name + ".b_hh", zeros_param({3 * h}));
  };
  auto lstm = [&](const std::string& name, std::size_t in, std::size_t h, Rng& rng) {
    add_param(name + ".w_ih", glorot_uniform({in, 4 * h}, in, 4 * h, rng));
    add_param(name + ".w_hh", glorot_uniform({h, 4 * h}, h, 4 * h, rng));
    add_param(name + ".b", zeros_param({4 * h}));
  };

  {
    Rng rng(derive_seed(seed, kPrenet));
    dense("prenet.fc1", config_.ppg_dim, w.ppg_prenet, rng);
    dense("prenet.fc2", w.ppg_prenet, w.ppg_prenet, rng);
  }
  {
    Rng rng(derive_seed(seed, kEncoder));
    if (config_.encoder == EncoderKind::cbhg) {
      for (std::size_t k = 1; k <= w.cbhg_bank_k; ++k) {
        conv1(idx("encoder.bank", k), k, w.ppg_prenet, w.cbhg_channels, rng);
      }
      conv1("encoder.proj1", w.cbhg_projection_kernel, w.cbhg_bank_k * w.cbhg_channels,
            w.cbhg_channels, rng);
      conv1("encoder.proj2", w.cbhg_projection_kernel, w.cbhg_channels, w.ppg_prenet, rng);
      for (std::size_t i = 0; i < w.highway_layers; ++i) {
        dense(idx("encoder.highway", i) + ".h", w.ppg_prenet, w.ppg_prenet, rng);
        dense(idx("encoder.highway", i) + ".t", w.ppg_prenet, w.ppg_prenet, rng);
      }
      gru("encoder.gru_fw", w.ppg_prenet, w.encoder_gru, rng);
      gru("encoder.gru_bw", w.ppg_prenet, w.encoder_gru, rng);
    } else {
      std::size_t in = w.ppg_prenet;
      for (std::size_t i = 0; i < w.taco2_conv_layers; ++i) {
        conv1(idx("encoder.conv", i), w.taco2_kernel, in, w.taco2_channels, rng);
        in = w.taco2_channels;
      }
      lstm("encoder.lstm_fw", in, w.taco2_lstm, rng);
      lstm("encoder.lstm_bw", in, w.taco2_lstm, rng);
    }
  }
  if (config_.use_mel_ref) {
    Rng rng(derive_seed(seed, kMelRef));
    std::size_t in = 1;
    for (std::size_t i = 0; i < 6; ++i) {
      conv2(idx("mel_ref.conv", i), in, w.mel_ref_channels[i], rng);
      in = w.mel_ref_channels[i];
    }
    const std::size_t flat = halved(mel, 6) * in;
    gru("mel_ref.gru_fw", flat, w.mel_ref_gru, rng);
    gru("mel_ref.gru_bw", flat, w.mel_ref_gru, rng);
  }
  if (config_.use_phone_ref) {
    Rng rng(derive_seed(seed, kPhoneRef));
    add_param("phone_ref.embedding",
              glorot_uniform({config_.n_phonemes, w.phone_embedding}, config_.n_phonemes,
                             w.phone_embedding, rng));
    std::size_t in = 1;
    for (std::size_t i = 0; i < 6; ++i) {
      conv2(idx("phone_ref.conv", i), in, w.phone_ref_channels[i], rng);
      in = w.phone_ref_channels[i];
    }
    const std::size_t flat = halved(w.phone_embedding, 6) * in;
    gru("phone_ref.gru_fw", flat, w.phone_ref_gru, rng);
    gru("phone_ref.gru_bw", flat, w.phone_ref_gru, rng);
  }
  const std::size_t aug = config_.augmented_width();
  {
    Rng rng(derive_seed(seed, kDecoder));
    dense("decoder.prenet.fc1", mel, w.decoder_prenet, rng);
    dense("decoder.prenet.fc2", w.decoder_prenet, w.decoder_prenet, rng);
    lstm("decoder.attention_lstm", w.decoder_prenet + aug, w.attention_lstm, rng);
    lstm("decoder.decoder_lstm", w.attention_lstm + aug, w.decoder_lstm, rng);
    dense("decoder.mel_proj", w.decoder_lstm + aug, config_.reduction_factor * mel, rng);
    if (config_.stop_token) dense("decoder.stop_proj", w.decoder_lstm + aug, 1, rng);
  }
  {
    Rng rng(derive_seed(seed, kAttention));
    if (config_.attention == AttentionKind::gmm) {
      auto p = attention::make_gmm_params(w.attention_lstm, w.gmm_hidden, w.gmm_components, rng);
      add_param("attention.w", p.w);
      add_param("attention.b", p.b);
      add_param("attention.v", p.v);
    } else {
      auto p = attention::make_lsa_params(w.attention_lstm, aug, w.lsa_dim, w.lsa_filters,
                                          w.lsa_filter_width, w.lsa_window, rng);
      add_param("attention.query_w", p.query_w);
      add_param("attention.memory_w", p.memory_w);
      add_param("attention.loc_conv", p.loc_conv);
      add_param("attention.loc_w", p.loc_w);
      add_param("attention.bias", p.bias);
      add_param("attention.v", p.v);
    }
  }
  {
    Rng rng(derive_seed(seed, kPostnet));
    std::size_t in = mel;
    for (std::size_t i = 0; i < w.postnet_layers; ++i) {
      const std::size_t out = i + 1 == w.postnet_layers ? mel : w.postnet_channels;
      conv1(idx("postnet.conv", i), w.postnet_kernel, in, out, rng);
      in = out;
    }
  }
}

Tensor& Model::add_param(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ContractError("duplicate parameter " + name);
  index_[name] = params_.size();
  params_.emplace_back(name, std::move(t));
  return params_.back().second;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named " + name);
  return params_[it->second].second;
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

std::map<std::string, std::size_t> Model::group_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& [name, t] : params_) out[name.substr(0, name.find('.'))] += t.numel();
  return out;
}

namespace {
GruParams gru_params(const Model& m, const std::string& name) {
  return {m.param(name + ".w_ih"), m.param(name + ".w_hh"), m.param(name + ".b_ih"),
          m.param(name + ".b_hh")};
}

LstmParams lstm_params(const Model& m, const std::string& name) {
  return {m.param(name + ".w_ih"), m.param(name + ".w_hh"), m.param(name + ".b")};
}

// Runs a GRU over the rows of x. Returns every hidden state [T x H]; the
// state after the last processed row goes to *last.
Tensor run_gru(const Tensor& x, const GruParams& p, bool reverse, Tensor* last = nullptr) {
  const std::size_t steps = x.dim(0), hidden = p.w_hh.dim(0);
  Tensor proj = add(matmul(x, p.w_ih), p.b_ih);
  Tensor h = Tensor::zeros({1, hidden});
  std::vector<Tensor> outs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    h = gru_cell_projected(slice(proj, 0, t, 1), h, p);
    outs[t] = h;
  }
  if (last) *last = h;
  return step_rows(outs);
}

Tensor run_lstm(const Tensor& x, const LstmParams& p, bool reverse) {
  const std::size_t steps = x.dim(0), hidden = p.w_hh.dim(0);
  LstmState s{Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden})};
  std::vector<Tensor> outs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    s = lstm_cell(slice(x, 0, t, 1), s, p);
    outs[t] = s.h;
  }
  return step_rows(outs);
}

// Six 3x3 convolutions over a 1-channel image [T x F], ReLU after each,
// then the frequency and channel axes are flattened.
Tensor conv_stack(const Model& m, const std::string& prefix, const Tensor& image,
                  std::size_t final_time_stride) {
  Tensor x = reshape(image, {image.dim(0), image.dim(1), 1});
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string name = idx(prefix + ".conv", i);
    const std::size_t sh = i == 5 ? final_time_stride : 1;
    x = relu(add(conv2d(x, m.param(name + ".w"), sh, 2), m.param(name + ".b")));
  }
  return reshape(x, {x.dim(0), x.dim(1) * x.dim(2)});
}
}  // namespace

Tensor Model::ppg_prenet(const Tensor& ppg, const RunContext& ctx) const {
  if (ppg.rank() != 2 || ppg.dim(1) != config_.ppg_dim) {
    throw DimensionError("ppg_prenet expects [T x " + std::to_string(config_.ppg_dim) + "], got " +
                         shape_str(ppg.shape()));
  }
  const double rate = config_.dropout.ppg_prenet;
  Tensor x = relu(linear(ppg, param("prenet.fc1.w"), param("prenet.fc1.b")));
  if (ctx.training) x = dropout(x, rate, *ctx.rng, true);
  x = relu(linear(x, param("prenet.fc2.w"), param("prenet.fc2.b")));
  if (ctx.training) x = dropout(x, rate, *ctx.rng, true);
  return x;
}

Tensor Model::cbhg_encode(const Tensor& x) const {
  const Widths& w = config_.widths;
  if (x.rank() != 2 || x.dim(1) != w.ppg_prenet) {
    throw DimensionError("cbhg_encode expects [T x " + std::to_string(w.ppg_prenet) + "], got " +
                         shape_str(x.shape()));
  }
  std::vector<Tensor> bank;
  for (std::size_t k = 1; k <= w.cbhg_bank_k; ++k) {
    const std::string name = idx("encoder.bank", k);
    bank.push_back(relu(add(conv1d(x, param(name + ".w"), 1, Padding::same), param(name + ".b"))));
  }
  Tensor y = bank.size() == 1 ? bank[0] : concat(bank, 1);
  y = max_pool1d(y, w.cbhg_pool_width, 1);
  y = relu(add(conv1d(y, param("encoder.proj1.w"), 1, Padding::same), param("encoder.proj1.b")));
  y = add(conv1d(y, param("encoder.proj2.w"), 1, Padding::same), param("encoder.proj2.b"));
  y = add(y, x);
  for (std::size_t i = 0; i < w.highway_layers; ++i) y = highway(y, i);
  Tensor fw = run_gru(y, gru_params(*this, "encoder.gru_fw"), false);
  Tensor bw = run_gru(y, gru_params(*this, "encoder.gru_bw"), true);
  return concat({fw, bw}, 1);
}

Tensor Model::highway(const Tensor& x, std::size_t layer) const {
  const std::string name = idx("encoder.highway", layer);
  Tensor h = relu(linear(x, param(name + ".h.w"), param(name + ".h.b")));
  Tensor t = sigmoid(linear(x, param(name + ".t.w"), param(name + ".t.b")));
  return add(mul(t, h), mul(add_scalar(neg(t), 1.0), x));
}

Tensor Model::taco2_convs(const Tensor& x) const {
  const Widths& w = config_.widths;
  if (x.rank() != 2 || x.dim(1) != w.ppg_prenet) {
    throw DimensionError("taco2 encoder expects [T x " + std::to_string(w.ppg_prenet) + "], got " +
                         shape_str(x.shape()));
  }
  Tensor y = x;
  for (std::size_t i = 0; i < w.taco2_conv_layers; ++i) {
    const std::string name = idx("encoder.conv", i);
    y = relu(add(conv1d(y, param(name + ".w"), 1, Padding::same), param(name + ".b")));
  }
  return y;
}

Tensor Model::taco2_encode(const Tensor& x) const {
  Tensor y = taco2_convs(x);
  Tensor fw = run_lstm(y, lstm_params(*this, "encoder.lstm_fw"), false);
  Tensor bw = run_lstm(y, lstm_params(*this, "encoder.lstm_bw"), true);
  return concat({fw, bw}, 1);
}

Tensor Model::mel_ref_encode(const Tensor& ref_mel) const {
  if (!config_.use_mel_ref) throw ContractError("config has no mel reference encoder");
  if (ref_mel.rank() != 2 || ref_mel.dim(1) != config_.mel_dim) {
    throw DimensionError("mel_ref_encode expects [T x " + std::to_string(config_.mel_dim) +
                         "], got " + shape_str(ref_mel.shape()));
  }
  if (ref_mel.dim(0) < 3) throw ContractError("mel reference needs at least 3 frames");
  Tensor x = conv_stack(*this, "mel_ref", ref_mel, 3);
  Tensor fw = run_gru(x, gru_params(*this, "mel_ref.gru_fw"), false);
  Tensor bw = run_gru(x, gru_params(*this, "mel_ref.gru_bw"), true);
  return tanh(add(fw, bw));
}

Tensor Model::phone_ref_encode(const std::vector<std::size_t>& phones) const {
  if (!config_.use_phone_ref) throw ContractError("config has no phoneme reference encoder");
  if (phones.empty()) throw ContractError("phoneme reference needs at least one phoneme");
  Tensor x = conv_stack(*this, "phone_ref", gather_rows(param("phone_ref.embedding"), phones), 1);
  Tensor fw_last, bw_last;
  run_gru(x, gru_params(*this, "phone_ref.gru_fw"), false, &fw_last);
  run_gru(x, gru_params(*this, "phone_ref.gru_bw"), true, &bw_last);
  return reshape(tanh(add(fw_last, bw_last)), {config_.widths.phone_ref_gru});
}

RefEmbeddings Model::encode_refs(const RefInputs& refs) const {
  RefEmbeddings out;
  if (config_.use_mel_ref) {
    if (!refs.mel.defined()) throw ContractError("config enables use_mel_ref but no reference mel was given");
    out.mel_ref = mel_ref_encode(refs.mel);
  }
  if (config_.use_phone_ref) {
    if (refs.phones.empty()) throw ContractError("config enables use_phone_ref but no phonemes were given");
    out.phone_ref = phone_ref_encode(refs.phones);
  }
  return out;
}

Tensor interpolate_time(const Tensor& x, std::size_t length) {
  if (x.rank() != 2 || length < 1) throw DimensionError("interpolate_time needs [T x C] and length >= 1");
  const std::size_t src = x.dim(0);
  Tensor weights = Tensor::zeros({length, src});
  auto wv = weights.mutable_data();
  for (std::size_t t = 0; t < length; ++t) {
    const double pos = length == 1 || src == 1
                           ? 0.0
                           : static_cast<double>(t) * static_cast<double>(src - 1) /
                                 static_cast<double>(length - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), src - 1);
    const double frac = pos - static_cast<double>(lo);
    wv[t * src + lo] += 1.0 - frac;
    if (frac > 0.0) wv[t * src + lo + 1] += frac;
  }
  return matmul(weights, x);
}

Tensor Model::augment(const Tensor& enc, const RefEmbeddings& refs) const {
  if (enc.rank() != 2 || enc.dim(1) != config_.encoder_width()) {
    throw DimensionError("augment expects encoder output [T x " +
                         std::to_string(config_.encoder_width()) + "], got " + shape_str(enc.shape()));
  }
  std::vector<Tensor> parts{enc};
  const std::size_t steps = enc.dim(0);
  if (config_.use_mel_ref) {
    if (!refs.mel_ref.defined()) throw ContractError("augment: missing mel reference embedding");
    parts.push_back(interpolate_time(refs.mel_ref, steps));
  }
  if (config_.use_phone_ref) {
    if (!refs.phone_ref.defined()) throw ContractError("augment: missing phoneme reference embedding");
    parts.push_back(mul(Tensor::full({steps, 1}, 1.0),
                        reshape(refs.phone_ref, {1, refs.phone_ref.numel()})));
  }
  Tensor out = parts.size() == 1 ? enc : concat(parts, 1);
  if (out.dim(1) != config_.augmented_width()) {
    throw DimensionError("augmented width " + std::to_string(out.dim(1)) + " != configured " +
                         std::to_string(config_.augmented_width()));
  }
  return out;
}

Tensor Model::encode(const Tensor& ppg, const RefInputs& refs, const RunContext& ctx) const {
  Tensor pre = ppg_prenet(ppg, ctx);
  Tensor enc = config_.encoder == EncoderKind::cbhg ? cbhg_encode(pre) : taco2_encode(pre);
  RefEmbeddings emb = encode_refs(refs);
  Tensor aug = augment(enc, emb);
  if (trace_) {
    auto& t = *trace_;
    t["ppg_prenet"] = pre.dim(1);
    t["encoder"] = enc.dim(1);
    if (emb.mel_ref.defined()) t["mel_ref"] = emb.mel_ref.dim(1);
    if (emb.mel_ref.defined()) t["mel_ref_steps"] = emb.mel_ref.dim(0);
    if (emb.phone_ref.defined()) t["phone_ref"] = emb.phone_ref.numel();
    t["augmented"] = aug.dim(1);
  }
  return aug;
}

Tensor Model::postnet(const Tensor& mel_before, std::size_t valid_frames) const {
  Tensor x = mel_before;
  const std::size_t layers = config_.widths.postnet_layers;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = idx("postnet.conv", i);
    x = add(conv1d(zero_beyond(x, valid_frames), param(name + ".w"), 1, Padding::same),
            param(name + ".b"));
    if (i + 1 < layers) {
      x = tanh(x);
      if (trace_) (*trace_)["postnet_hidden"] = x.dim(1);
    }
  }
  return add(mel_before, x);
}

DecodeResult Model::decode(const Tensor& enc_aug, const DecodeRequest& req,
                           const RunContext& ctx) const {
  const Widths& w = config_.widths;
  const std::size_t r = config_.reduction_factor, mel = config_.mel_dim;
  const std::size_t enc_len = enc_aug.dim(0), aug = config_.augmented_width();
  if (enc_aug.rank() != 2 || enc_aug.dim(1) != aug) {
    throw DimensionError("decode expects [T x " + std::to_string(aug) + "], got " +
                         shape_str(enc_aug.shape()));
  }
  std::size_t steps = 0;
  if (req.mode == DecodeMode::teacher_forced) {
    if (!req.target.defined() || req.target.rank() != 2 || req.target.dim(1) != mel) {
      throw DimensionError("teacher forcing needs a [T x " + std::to_string(mel) + "] target");
    }
    if (req.target.dim(0) % r != 0) {
      throw ContractError("teacher-forced target length must be a multiple of r (use pad_to_multiple)");
    }
    steps = req.target.dim(0) / r;
  } else {
    if (req.max_steps < 1) throw ContractError("free-running decode needs max_steps >= 1");
    steps = req.max_steps;
  }

  const bool gmm = config_.attention == AttentionKind::gmm;
  const LstmParams att_lstm = lstm_params(*this, "decoder.attention_lstm");
  const LstmParams dec_lstm = lstm_params(*this, "decoder.decoder_lstm");
  attention::GmmParams gmm_p;
  attention::LsaParams lsa_p;
  attention::GmmState gmm_state;
  Tensor processed, prev_alpha, cum_alpha;
  if (gmm) {
    gmm_p = {param("attention.w"), param("attention.b"), param("attention.v")};
    gmm_state = attention::gmm_init_state(w.gmm_components);
  } else {
    lsa_p = {param("attention.query_w"), param("attention.memory_w"), param("attention.loc_conv"),
             param("attention.loc_w"),   param("attention.bias"),     param("attention.v"),
             w.lsa_window};
    processed = matmul(enc_aug, lsa_p.memory_w);
    prev_alpha = attention::lsa_initial_alpha(enc_len);
    cum_alpha = prev_alpha;
  }

  LstmState att{Tensor::zeros({1, w.attention_lstm}), Tensor::zeros({1, w.attention_lstm})};
  LstmState dec{Tensor::zeros({1, w.decoder_lstm}), Tensor::zeros({1, w.decoder_lstm})};
  Tensor context = Tensor::zeros({1, aug});
  Tensor prev_frame = Tensor::zeros({1, mel});
  std::vector<Tensor> frames, stops;
  std::vector<double> align;
  DecodeResult out;

  for (std::size_t i = 0; i < steps; ++i) {
    if (i > 0) {
      prev_frame = req.mode == DecodeMode::teacher_forced ? slice(req.target, 0, i * r - 1, 1)
                                                          : slice(frames.back(), 0, r - 1, 1);
    }
    Tensor pre = relu(linear(prev_frame, param("decoder.prenet.fc1.w"), param("decoder.prenet.fc1.b")));
    if (ctx.training) pre = dropout(pre, config_.dropout.decoder_prenet, *ctx.rng, true);
    pre = relu(linear(pre, param("decoder.prenet.fc2.w"), param("decoder.prenet.fc2.b")));
    if (ctx.training) pre = dropout(pre, config_.dropout.decoder_prenet, *ctx.rng, true);

    att = lstm_cell(concat({pre, context}, 1), att, att_lstm);
    Tensor query = ctx.training ? dropout(att.h, config_.dropout.lstm, *ctx.rng, true) : att.h;

    Tensor alpha;
    if (gmm) {
      auto step = attention::gmm_step(query, gmm_state, enc_len, gmm_p, config_.sigma_form, i);
      alpha = step.alpha;
      gmm_state = step.state;
    } else {
      auto step = attention::lsa_windowed_step(query, processed, prev_alpha, cum_alpha, i,
                                               config_.len_ratio(), lsa_p);
      alpha = step.alpha;
      prev_alpha = step.alpha;
      cum_alpha = step.cumulative;
    }
    context = attention::attend(alpha, enc_aug, gmm && config_.normalize_context);

    dec = lstm_cell(concat({query, context}, 1), dec, dec_lstm);
    Tensor hidden = ctx.training ? dropout(dec.h, config_.dropout.lstm, *ctx.rng, true) : dec.h;
    Tensor proj_in = concat({hidden, context}, 1);
    Tensor frame = reshape(linear(proj_in, param("decoder.mel_proj.w"), param("decoder.mel_proj.b")),
                           {r, mel});
    require_finite(frame, "mel frame", i);
    frames.push_back(frame);
    Tensor stop = config_.stop_token
                      ? linear(proj_in, param("decoder.stop_proj.w"), param("decoder.stop_proj.b"))
                      : Tensor::full({1, 1}, -1e9);
    stops.push_back(stop);
    align.insert(align.end(), alpha.values().begin(), alpha.values().end());

    if (trace_ && i == 0) {
      auto& t = *trace_;
      t["decoder_prenet"] = pre.dim(1);
      t["attention_lstm"] = att.h.dim(1);
      t["attention_weights"] = alpha.numel();
      t["context"] = context.dim(1);
      t["decoder_lstm"] = dec.h.dim(1);
      t["projection"] = frame.numel();
      if (gmm) t["gmm_components"] = gmm_state.mu.numel();
    }

    if (req.mode == DecodeMode::free_running && !req.fixed_length) {
      if (config_.stop_token && stop.item() > 0.0) {
        out.stopped = true;
      } else if (gmm && config_.stop_on_overrun) {
        const auto& mu = gmm_state.mu.values();
        out.stopped = std::all_of(mu.begin(), mu.end(),
                                  [&](double m) { return m > static_cast<double>(enc_len); });
      }
      if (out.stopped) break;
    }
  }

  out.steps = frames.size();
  out.mel_before = step_rows(frames);
  out.mel_after = postnet(out.mel_before, req.valid_frames);
  require_finite(out.mel_after, "postnet output", out.steps);
  out.stop_logits = reshape(step_rows(stops), {out.steps});
  out.alignment = Tensor::from({out.steps, enc_len}, std::move(align));
  if (trace_) (*trace_)["mel_after"] = out.mel_after.dim(1);
  return out;
}

WidthTrace Model::trace_widths(const Tensor& ppg, const RefInputs& refs, const Tensor& target) const {
  WidthTrace trace;
  NoGradGuard no_grad;
  trace_ = &trace;
  try {
    Tensor aug = encode(ppg, refs, {});
    DecodeRequest req;
    req.target = pad_to_multiple(target, config_.reduction_factor);
    decode(aug, req, {});
  } catch (...) {
    trace_ = nullptr;
    throw;
  }
  trace_ = nullptr;
  return trace;
}

Tensor pad_to_multiple(const Tensor& mel, std::size_t r, std::size_t min_frames) {
  const std::size_t frames = mel.dim(0), width = mel.dim(1);
  std::size_t target = std::max(frames, min_frames);
  target = (target + r - 1) / r * r;
  if (target == frames) return mel;
  std::vector<double> data(mel.values().begin(), mel.values().end());
  data.reserve(target * width);
  for (std::size_t t = frames; t < target; ++t) {
    data.insert(data.end(), mel.values().end() - static_cast<long>(width), mel.values().end());
  }
  return Tensor::from({target, width}, std::move(data));
}

LossTerms conversion_loss(const DecodeResult& out, const Tensor& target, std::size_t valid_frames,
                          std::size_t r, bool use_stop) {
  const std::size_t frames = target.dim(0), width = target.dim(1);
  if (out.mel_before.shape() != target.shape() || out.mel_after.shape() != target.shape()) {
    throw DimensionError("loss: prediction " + shape_str(out.mel_before.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  if (valid_frames == 0 || valid_frames > frames) valid_frames = frames;
  const std::size_t steps = out.stop_logits.numel();
  const std::size_t valid_steps = (valid_frames + r - 1) / r;
  if (valid_steps > steps) throw DimensionError("loss: fewer decoder steps than valid frames need");

  Tensor mask = Tensor::zeros({frames, 1});
  for (std::size_t t = 0; t < valid_frames; ++t) mask.mutable_data()[t] = 1.0;
  const double denom = 1.0 / static_cast<double>(valid_frames * width);
  Tensor mse_b = scale(sum(square(mul(sub(out.mel_before, target), mask))), denom);
  Tensor mse_a = scale(sum(square(mul(sub(out.mel_after, target), mask))), denom);

  LossTerms terms;
  terms.mse_before = mse_b.item();
  terms.mse_after = mse_a.item();
  terms.total = add(mse_b, mse_a);
  if (use_stop) {
    Tensor stop_target = Tensor::zeros({steps});
    Tensor step_mask = Tensor::zeros({steps});
    for (std::size_t i = 0; i < valid_steps; ++i) step_mask.mutable_data()[i] = 1.0;
    stop_target.mutable_data()[valid_steps - 1] = 1.0;
    // softplus(z) - y z is the stable form of the logistic cross-entropy.
    Tensor per_step = sub(softplus(out.stop_logits), mul(stop_target, out.stop_logits));
    Tensor bce = scale(sum(mul(per_step, step_mask)), 1.0 / static_cast<double>(valid_steps));
    terms.bce = bce.item();
    terms.total = add(terms.total, bce);
  }
  return terms;
}

}  // namespace ppg2mel::model
