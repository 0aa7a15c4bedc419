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
#include <string>

#include <json.hpp>

#include "ppg2mel/model/config.h"
#include "ppg2mel/synth/synth.h"
#include "ppg2mel/train/train.h"

namespace ppg2mel::cli {

// Corpus recipe for commands that generate their own data (ablate).
struct DataConfig {
  std::uint64_t language_seed = 1;
  std::uint64_t corpus_seed = 1;
  std::size_t train_n = 50;
  std::size_t val_n = 10;
  // Held-out utterances per length multiplier.
  std::size_t test_n = 5;
  synth::LengthRange lengths;
};

struct RunConfig {
  static constexpr int kVersion = 1;
  model::SystemConfig model;
  train::TrainConfig train;
  DataConfig data;
};

// ConfigError listing every offending key across all sections.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace ppg2mel::cli
