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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppg2mel/attention/attention.h"
#include "ppg2mel/model/config.h"
#include "ppg2mel/num/rng.h"
#include "ppg2mel/num/tensor.h"
#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::model {

// Dropout switch and randomness for one forward pass. `rng` may be null when
// `training` is false.
struct RunContext {
  bool training = false;
  num::Rng* rng = nullptr;
};

struct RefInputs {
  num::Tensor mel;                  // normalized [T_ref x 80]; needed iff use_mel_ref
  std::vector<std::size_t> phones;  // needed iff use_phone_ref
};

struct RefEmbeddings {
  num::Tensor mel_ref;    // [ceil(T_ref / 3) x 4]
  num::Tensor phone_ref;  // [128]
};

enum class DecodeMode { teacher_forced, free_running };

struct DecodeRequest {
  DecodeMode mode = DecodeMode::teacher_forced;
  // teacher_forced: [T x mel_dim] with T divisible by r.
  num::Tensor target;
  // Frames per sequence that count; PostNet inputs past it are zeroed.
  // 0 means all of them.
  std::size_t valid_frames = 0;
  // free_running: hard cap on decoder steps.
  std::size_t max_steps = 0;
  // free_running: run exactly max_steps, ignoring the stop conditions.
  bool fixed_length = false;
};

struct DecodeResult {
  num::Tensor mel_before;    // [T_out x mel_dim]
  num::Tensor mel_after;     // [T_out x mel_dim]
  num::Tensor stop_logits;   // [T_out / r]
  num::Tensor alignment;     // [T_out / r x T_enc], detached
  std::size_t steps = 0;
  bool stopped = false;      // free_running ended by a stop condition
};

struct LossTerms {
  num::Tensor total;
  double mse_before = 0.0;
  double mse_after = 0.0;
  double bce = 0.0;
};

// Tensor widths observed at module boundaries during one forward pass.
using WidthTrace = std::map<std::string, std::size_t>;

class Model {
 public:
  Model(SystemConfig config, std::uint64_t seed);

  const SystemConfig& config() const { return config_; }
  const num::NamedTensors& params() const { return params_; }
  num::NamedTensors& params() { return params_; }
  const num::Tensor& param(const std::string& name) const;
  std::size_t param_count() const;
  // Parameter count per top-level group (prefix before the first '.').
  std::map<std::string, std::size_t> group_counts() const;

  // Encoder side.
  num::Tensor ppg_prenet(const num::Tensor& ppg, const RunContext& ctx) const;
  num::Tensor cbhg_encode(const num::Tensor& x) const;
  num::Tensor taco2_encode(const num::Tensor& x) const;
  // y = T * relu(x Wh + bh) + (1 - T) * x,  T = sigmoid(x Wt + bt)
  num::Tensor highway(const num::Tensor& x, std::size_t layer) const;
  // The three ReLU convolutions in front of the baseline encoder's BiLSTM.
  num::Tensor taco2_convs(const num::Tensor& x) const;
  num::Tensor mel_ref_encode(const num::Tensor& ref_mel) const;
  num::Tensor phone_ref_encode(const std::vector<std::size_t>& phones) const;
  RefEmbeddings encode_refs(const RefInputs& refs) const;
  num::Tensor augment(const num::Tensor& enc, const RefEmbeddings& refs) const;
  // prenet -> encoder -> augment.
  num::Tensor encode(const num::Tensor& ppg, const RefInputs& refs, const RunContext& ctx) const;

  DecodeResult decode(const num::Tensor& enc_aug, const DecodeRequest& request,
                      const RunContext& ctx) const;

  // Records boundary widths for a forward pass on the given input.
  WidthTrace trace_widths(const num::Tensor& ppg, const RefInputs& refs,
                          const num::Tensor& target) const;

 private:
  num::Tensor& add_param(const std::string& name, num::Tensor t);
  num::Tensor postnet(const num::Tensor& mel_before, std::size_t valid_frames) const;

  SystemConfig config_;
  num::NamedTensors params_;
  std::map<std::string, std::size_t> index_;
  mutable WidthTrace* trace_ = nullptr;
};

// MSE(before) + MSE(after) + BCE(stop). Frames at or past `valid_frames` and
// decoder steps past the last valid one are masked out. The stop target is
// 1 on the decoder step holding the last valid frame.
LossTerms conversion_loss(const DecodeResult& out, const num::Tensor& target,
                          std::size_t valid_frames, std::size_t reduction_factor,
                          bool use_stop = true);

// Repeats the last frame until the length is a multiple of r.
num::Tensor pad_to_multiple(const num::Tensor& mel, std::size_t r, std::size_t min_frames = 0);

// Linear interpolation along time from [T' x C] to [T x C]; constants stay
// constant.
num::Tensor interpolate_time(const num::Tensor& x, std::size_t length);

}  // namespace ppg2mel::model
