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
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ppg2mel/num/tensor.h"

// TNSR binary layout (all little-endian):
//   "TNSR" | u16 version (=1) | u16 rank | rank x u64 extents | f64 payload
// A checkpoint is a plain concatenation of records:
//   u16 name length | UTF-8 name | TNSR blob
namespace ppg2mel::num {

inline constexpr std::uint16_t kTnsrVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_tnsr(std::ostream& os, const Tensor& t);
Tensor read_tnsr(std::istream& is);

void save_tnsr(const std::filesystem::path& path, const Tensor& t);
Tensor load_tnsr(const std::filesystem::path& path);

void write_checkpoint(std::ostream& os, const NamedTensors& tensors);
NamedTensors read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace ppg2mel::num
