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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppg2mel/features/features.h"
#include "ppg2mel/model/config.h"
#include "ppg2mel/synth/synth.h"
#include "ppg2mel/train/train.h"

namespace ppg2mel::train {

inline const std::vector<double> kLengthMultipliers{1.0, 1.5, 2.0};

// Held-out utterances whose PPG length is exactly round(multiplier * L).
struct LengthSet {
  double multiplier = 1.0;
  std::size_t ppg_frames = 0;
  std::vector<synth::Utterance> utterances;
};

struct AblationData {
  synth::ToyLanguage lang;
  std::vector<synth::Utterance> train;
  std::vector<synth::Utterance> val;
  std::vector<LengthSet> tests;
  // Seed for the native reference renditions used at evaluation time.
  std::uint64_t reference_seed = 0;

  // Longest training utterance in PPG frames.
  std::size_t max_train_ppg() const;
};

// Rejection-samples `count` utterances of exactly `ppg_frames` PPG frames.
std::vector<synth::Utterance> utterances_of_length(const synth::ToyLanguage& lang,
                                                   std::size_t ppg_frames, std::size_t count,
                                                   std::uint64_t seed);

struct LengthEval {
  double multiplier = 1.0;
  std::size_t ppg_frames = 0;
  double alignment_error = 0.0;  // mean over the set
  bool finite = true;            // every decoded frame finite
  num::Tensor example_alignment; // first utterance of the set
};

struct ArmResult {
  model::SystemKind system = model::SystemKind::s1;
  bool ok = false;
  std::string error;
  // The failure was a NumericError (non-finite values).
  bool numeric_failure = false;
  std::size_t param_count = 0;
  std::map<std::string, std::size_t> group_counts;
  double train_mse = 0.0;
  double val_mse = 0.0;
  std::vector<LengthEval> lengths;
  double wall_clock_s = 0.0;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  model::SystemConfig config;
  num::NamedTensors best_params;
  std::vector<LossRecord> curve;
};

struct AblationReport {
  std::size_t train_max_ppg = 0;
  // Fitted on the shared training corpus; every arm uses them.
  features::NormStats stats;
  std::vector<ArmResult> arms;
};

// `base` with the encoder, attention and reference switches of `kind`; all
// widths are kept, so arms differ only where the systems do.
model::SystemConfig system_config(model::SystemKind kind, const model::SystemConfig& base);

// Free-running decode of each test utterance for ceil(T_mel / r) steps with
// native references, scored against the decoder oracle.
LengthEval evaluate_length(const model::Model& model, const features::NormStats& stats,
                           const AblationData& data, const LengthSet& set);

// Everything a trained arm is scored on after training.
void evaluate_arm(const model::Model& model, const features::NormStats& stats,
                  const AblationData& data, ArmResult& arm);

using ArmCallback = std::function<void(model::SystemKind, const LossRecord&)>;

// Trains every requested system with the same seed and data. A failing arm
// is recorded with its error and the others continue. Arms run on up to
// `jobs` threads.
AblationReport run_ablation(const std::vector<model::SystemKind>& systems,
                            const model::SystemConfig& base, const AblationData& data,
                            const TrainConfig& config, unsigned jobs = 1,
                            const ArmCallback& on_step = {});

// Metrics only; deterministic for a fixed seed and data.
nlohmann::json report_json(const AblationReport& report);
// Wall-clock seconds per arm.
nlohmann::json timing_json(const AblationReport& report);

std::string multiplier_label(double multiplier);

}  // namespace ppg2mel::train
