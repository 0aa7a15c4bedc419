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
#include <filesystem>
#include <vector>

#include "ppg2mel/num/tensor.h"

// Frontend transforms: ASR-side frame stacking and mel min-max normalization.
namespace ppg2mel::features {

inline constexpr std::size_t kMelDim = 80;
inline constexpr double kNormLow = -4.0;
inline constexpr double kNormHigh = 4.0;

enum class MelState { raw, normalized };

struct MelSpectrogram {
  num::Tensor frames;  // [T x 80]
  MelState state = MelState::raw;
  double frame_shift_ms = 10.0;
  double window_ms = 50.0;

  std::size_t num_frames() const { return frames.dim(0); }
};

struct StackSpec {
  std::size_t stack = 8;
  std::size_t skip = 3;
};

// Per-dimension extrema of a training corpus.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dim() const { return min.size(); }
};

// Row r of the result concatenates input rows r*skip ... r*skip+stack-1; rows
// past the end repeat the last frame. Result: [ceil(T/skip) x stack*D].
num::Tensor stack_and_skip(const num::Tensor& x, const StackSpec& spec);

NormStats fit_norm(const std::vector<MelSpectrogram>& corpus);

// y = -4 + 8 (x - min) / (max - min), clipped to [-4, 4].
MelSpectrogram normalize(const MelSpectrogram& mel, const NormStats& stats);
MelSpectrogram denormalize(const MelSpectrogram& mel, const NormStats& stats);

// Stats file: a [2 x D] tensor, row 0 min, row 1 max.
num::Tensor stats_to_tensor(const NormStats& stats);
NormStats stats_from_tensor(const num::Tensor& t);
void save_stats(const std::filesystem::path& path, const NormStats& stats);
NormStats load_stats(const std::filesystem::path& path);

}  // namespace ppg2mel::features
