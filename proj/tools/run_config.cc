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

#include "run_config.h"

#include <fstream>

#include "ppg2mel/model/json_reader.h"
#include "ppg2mel/num/errors.h"

namespace ppg2mel::cli {

using nlohmann::json;

namespace {

void append_errors(std::vector<std::string>& errors, const std::string& section, const ConfigError& e) {
  // Section parsers report "invalid ... config:\n  key: problem" lines.
  std::string msg = e.what();
  std::size_t pos = 0;
  bool any = false;
  while ((pos = msg.find("\n  ", pos)) != std::string::npos) {
    pos += 3;
    const std::size_t end = msg.find('\n', pos);
    std::string line = msg.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (line.rfind(section + ".", 0) != 0) line = section + "." + line;
    errors.push_back(line);
    any = true;
  }
  if (!any) errors.push_back(section + ": " + msg);
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  std::vector<std::string> errors;
  RunConfig c;
  model::JsonReader top(j, "", errors);
  if (!j.is_object() || !j.contains("version")) {
    errors.push_back("version: missing");
  } else if (!j.at("version").is_number_integer() || j.at("version").get<int>() != RunConfig::kVersion) {
    errors.push_back("version: unsupported (expected " + std::to_string(RunConfig::kVersion) + ")");
  }
  int version = 0;
  top.field("version", version);

  if (const json* mj = top.child("model")) {
    json m = *mj;
    if (m.is_object() && !m.contains("version")) m["version"] = model::SystemConfig::kVersion;
    try {
      c.model = model::config_from_json(m);
    } catch (const ConfigError& e) {
      append_errors(errors, "model", e);
    }
  } else {
    errors.push_back("model: missing");
  }
  if (const json* tj = top.child("train")) {
    try {
      c.train = train::train_config_from_json(*tj);
    } catch (const ConfigError& e) {
      append_errors(errors, "train", e);
    }
  }
  if (const json* dj = top.child("data")) {
    model::JsonReader r(*dj, "data.", errors);
    r.field("language_seed", c.data.language_seed);
    r.field("corpus_seed", c.data.corpus_seed);
    r.field("train_n", c.data.train_n);
    r.field("val_n", c.data.val_n);
    r.field("test_n", c.data.test_n);
    r.field("min_phones", c.data.lengths.min_phones);
    r.field("max_phones", c.data.lengths.max_phones);
    r.field("min_duration", c.data.lengths.min_duration);
    r.field("max_duration", c.data.lengths.max_duration);
    r.reject_unknown();
    if (c.data.train_n < 1) errors.push_back("data.train_n: must be >= 1");
    const auto& l = c.data.lengths;
    if (l.min_phones < 1 || l.min_phones > l.max_phones) errors.push_back("data.min_phones: need 1 <= min_phones <= max_phones");
    if (l.min_duration < 1 || l.min_duration > l.max_duration) {
      errors.push_back("data.min_duration: need 1 <= min_duration <= max_duration");
    }
  }
  top.reject_unknown();
  if (!errors.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  json m = model::to_json(c.model);
  m.erase("version");
  const auto& l = c.data.lengths;
  return {{"version", RunConfig::kVersion},
          {"model", m},
          {"train", train::to_json(c.train)},
          {"data",
           {{"language_seed", c.data.language_seed},
            {"corpus_seed", c.data.corpus_seed},
            {"train_n", c.data.train_n},
            {"val_n", c.data.val_n},
            {"test_n", c.data.test_n},
            {"min_phones", l.min_phones},
            {"max_phones", l.max_phones},
            {"min_duration", l.min_duration},
            {"max_duration", l.max_duration}}}};
}

}  // namespace ppg2mel::cli
