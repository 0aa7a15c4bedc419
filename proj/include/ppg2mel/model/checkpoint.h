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

#include <filesystem>
#include <string>
#include <vector>

#include "ppg2mel/model/model.h"

namespace ppg2mel::model {

// A checkpoint is <path> (named TNSR bundle) plus <path>.json (the config).
std::filesystem::path config_path_for(const std::filesystem::path& checkpoint);

void save_model(const std::filesystem::path& checkpoint, const Model& model);

// Copies checkpoint tensors into `model`. LoadError when the stored config,
// parameter names or shapes disagree with the model.
void load_into(Model& model, const std::filesystem::path& checkpoint);

// Builds a model from the stored config and loads its weights.
Model load_model(const std::filesystem::path& checkpoint);

// Config keys (dotted paths) whose values differ.
std::vector<std::string> config_diff(const SystemConfig& a, const SystemConfig& b);

// Parameter-level comparison of two models.
struct StructuralDiff {
  std::vector<std::string> only_in_a;
  std::vector<std::string> only_in_b;
  std::vector<std::string> reshaped;  // shared names whose shapes differ
};
StructuralDiff structural_diff(const num::NamedTensors& a, const num::NamedTensors& b);

}  // namespace ppg2mel::model
