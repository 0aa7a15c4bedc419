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
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppg2mel/features/features.h"
#include "ppg2mel/model/model.h"
#include "ppg2mel/synth/synth.h"
#include "ppg2mel/train/adam.h"

namespace ppg2mel::train {

enum class LrSchedule { constant, exponential };

struct TrainConfig {
  double lr = 0.001;
  // Desk scale; the published runs used 64.
  std::size_t batch_size = 8;
  std::size_t max_steps = 2000;
  std::uint64_t seed = 1;
  double grad_clip_norm = 1.0;
  // Validation period in steps; validation also runs at step 0 and at the end.
  std::size_t val_every = 100;
  // Share of the corpus held out for validation when no separate validation
  // set is given.
  double val_fraction = 0.1;
  LrSchedule schedule = LrSchedule::constant;
  // exponential: lr * decay_rate^(step / decay_steps)
  double decay_rate = 0.5;
  std::size_t decay_steps = 1000;

  double lr_at(std::size_t step) const;
};

// ConfigError listing every offending key.
void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

// One utterance ready for the model: normalized target mel, its PPG, and the
// reference inputs. At training time the reference mel is the target itself.
struct Example {
  std::string id;
  num::Tensor ppg;
  num::Tensor mel;
  num::Tensor ref_mel;
  std::vector<std::size_t> phones;
};

Example make_example(const synth::Utterance& utt, const features::NormStats& stats);
std::vector<Example> make_examples(const std::vector<synth::Utterance>& corpus,
                                   const features::NormStats& stats);

struct LossRecord {
  std::size_t step = 0;
  double train_mse = 0.0;
  // NaN when validation did not run at this step.
  double val_mse = std::numeric_limits<double>::quiet_NaN();
};

// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  std::size_t step = 0;
  AdamState adam;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  num::NamedTensors best_params;
  std::vector<LossRecord> curve;
};

// Called after every step with the record just appended.
using StepCallback = std::function<void(const LossRecord&)>;

// Teacher-forced training from `state.step` up to `config.max_steps`. On
// return the model holds the last parameters and `state.best_params` the
// best-validation ones. An empty `val` validates on `data`. A non-finite loss
// throws NumericError naming the step and batch.
TrainState train(model::Model& model, const std::vector<Example>& data,
                 const std::vector<Example>& val, const TrainConfig& config,
                 TrainState state = {}, const StepCallback& on_step = {});

// Training from a pretrained checkpoint with a fresh optimizer. The
// checkpoint must match `config` (LoadError otherwise).
TrainState finetune(model::Model& model, const std::filesystem::path& checkpoint,
                    const std::vector<Example>& data, const std::vector<Example>& val,
                    const TrainConfig& config, const StepCallback& on_step = {});

// Mean teacher-forced MSE of the PostNet output over valid frames, inference
// mode.
double teacher_forced_mse(const model::Model& model, const std::vector<Example>& examples);

// Mean loss over one padded, teacher-forced batch in training mode.
model::LossTerms batch_loss(const model::Model& model, const std::vector<const Example*>& batch,
                            std::uint64_t dropout_seed);

// Copies tensor values (not autograd state).
num::NamedTensors snapshot(const num::NamedTensors& params);
void restore(num::NamedTensors& params, const num::NamedTensors& values);

// Training state bundle at <path>, model config at <path>.json.
void save_train_state(const std::filesystem::path& path, const model::Model& model,
                      const TrainState& state);
// Loads parameters into `model` and returns the rest.
TrainState load_train_state(const std::filesystem::path& path, model::Model& model);

// step,train_mse,val_mse with an empty val_mse field where validation did
// not run.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& curve);

// Normalization statistics stored next to a checkpoint.
std::filesystem::path stats_path_for(const std::filesystem::path& checkpoint);

}  // namespace ppg2mel::train
