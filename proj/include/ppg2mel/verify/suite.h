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
#include <string>
#include <vector>

#include "ppg2mel/model/config.h"

// Finite-difference suite behind the gradcheck command: every numcore
// primitive plus end-to-end checks of all four systems.
namespace ppg2mel::verify {

inline constexpr double kPrimitiveTolerance = 1e-6;
inline constexpr double kEndToEndTolerance = 1e-4;

struct SuiteRow {
  std::string component;
  double worst_rel_error = 0.0;
  double tolerance = 0.0;
  std::string worst_entry;  // tensor[index]
  std::size_t checked = 0;

  bool pass() const { return worst_rel_error < tolerance; }
};

struct SuiteOptions {
  // micro: widths 8, K=2. desk: the training widths, sampled sparsely.
  model::Scale scale = model::Scale::micro;
  // Entries checked per parameter tensor in the end-to-end part; 0 = all.
  std::size_t entries_per_tensor = 6;
  // Adds a primitive whose backward is deliberately wrong.
  bool inject_bug = false;
};

std::vector<SuiteRow> primitive_rows(bool inject_bug = false);

// One row per parameter group of the system's model.
std::vector<SuiteRow> end_to_end_rows(model::SystemKind kind, model::Scale scale,
                                      std::size_t entries_per_tensor);

std::vector<SuiteRow> run_suite(const SuiteOptions& options);

// Fixed-width table, one line per row, with a PASS/FAIL column.
std::string format_table(const std::vector<SuiteRow>& rows);

}  // namespace ppg2mel::verify
