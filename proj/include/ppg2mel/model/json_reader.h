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

#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ppg2mel::model {

// Reads the keys of one JSON object, collecting every problem before failing.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(prefix_ + ": expected an object");
  }

  template <typename T>
  void field(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      const nlohmann::json& v = obj_.at(key);
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_same_v<T, std::size_t>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errors_.push_back(prefix_ + key + ": " + e.what());
    }
  }

  template <typename Enum>
  void choice(const std::string& key, Enum& out, const std::vector<std::pair<std::string, Enum>>& names) {
    std::string text;
    bool present = obj_.is_object() && obj_.contains(key);
    field(key, text);
    if (!present || text.empty()) return;
    for (const auto& [n, e] : names) {
      if (n == text) {
        out = e;
        return;
      }
    }
    errors_.push_back(prefix_ + key + ": unknown value '" + text + "'");
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void reject_unknown() {
    if (!obj_.is_object()) return;
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) errors_.push_back(prefix_ + item.key() + ": unknown key");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

}  // namespace ppg2mel::model
