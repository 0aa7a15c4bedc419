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

#include "ppg2mel/model/checkpoint.h"

#include <algorithm>
#include <map>

#include "ppg2mel/num/errors.h"

namespace ppg2mel::model {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path config_path_for(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".json";
  return p;
}

void save_model(const fs::path& checkpoint, const Model& model) {
  num::save_checkpoint(checkpoint, model.params());
  save_config(config_path_for(checkpoint).string(), model.config());
}

std::vector<std::string> config_diff(const SystemConfig& a, const SystemConfig& b) {
  const json fa = to_json(a).flatten(), fb = to_json(b).flatten();
  std::vector<std::string> keys;
  for (const auto& item : fa.items()) {
    if (!fb.contains(item.key()) || fb.at(item.key()) != item.value()) keys.push_back(item.key());
  }
  for (const auto& item : fb.items()) {
    if (!fa.contains(item.key())) keys.push_back(item.key());
  }
  return keys;
}

void load_into(Model& model, const fs::path& checkpoint) {
  SystemConfig stored;
  try {
    stored = load_config(config_path_for(checkpoint).string());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  }
  const auto diff = config_diff(stored, model.config());
  if (!diff.empty()) {
    std::string keys;
    for (const auto& k : diff) keys += (keys.empty() ? "" : ", ") + k;
    throw LoadError("checkpoint config differs from model config at: " + keys);
  }
  num::NamedTensors tensors;
  try {
    tensors = num::load_checkpoint(checkpoint);
  } catch (const FormatError& e) {
    throw LoadError(std::string("checkpoint ") + checkpoint.string() + ": " + e.what());
  }
  auto& params = model.params();
  if (tensors.size() != params.size()) {
    throw LoadError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, t] = tensors[i];
    if (name != params[i].first || t.shape() != params[i].second.shape()) {
      throw LoadError("checkpoint tensor " + name + " " + num::shape_str(t.shape()) +
                      " does not match model parameter " + params[i].first + " " +
                      num::shape_str(params[i].second.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].second.mutable_data();
    const auto& src = tensors[i].second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

Model load_model(const fs::path& checkpoint) {
  SystemConfig config;
  try {
    config = load_config(config_path_for(checkpoint).string());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  }
  Model model(config, 0);
  load_into(model, checkpoint);
  return model;
}

StructuralDiff structural_diff(const num::NamedTensors& a, const num::NamedTensors& b) {
  std::map<std::string, num::Shape> sa, sb;
  for (const auto& [n, t] : a) sa[n] = t.shape();
  for (const auto& [n, t] : b) sb[n] = t.shape();
  StructuralDiff d;
  for (const auto& [n, s] : sa) {
    auto it = sb.find(n);
    if (it == sb.end()) {
      d.only_in_a.push_back(n);
    } else if (it->second != s) {
      d.reshaped.push_back(n);
    }
  }
  for (const auto& [n, s] : sb) {
    if (!sa.count(n)) d.only_in_b.push_back(n);
  }
  return d;
}

}  // namespace ppg2mel::model
