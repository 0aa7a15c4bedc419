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

#include "ppg2mel/features/features.h"

#include <algorithm>
#include <limits>
#include <string>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::features {

using num::Tensor;

num::Tensor stack_and_skip(const Tensor& x, const StackSpec& spec) {
  if (spec.stack < 1 || spec.skip < 1) throw ContractError("stack and skip must be >= 1");
  if (!x.defined() || x.rank() != 2) throw ContractError("stack_and_skip needs a [T x D] matrix");
  const std::size_t frames = x.dim(0), dim = x.dim(1);
  const std::size_t rows = (frames + spec.skip - 1) / spec.skip;
  Tensor out = Tensor::zeros({rows, spec.stack * dim});
  auto os = out.mutable_data();
  const auto& xs = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t s = 0; s < spec.stack; ++s) {
      const std::size_t src = std::min(r * spec.skip + s, frames - 1);
      std::copy_n(xs.begin() + static_cast<long>(src * dim), dim,
                  os.begin() + static_cast<long>((r * spec.stack + s) * dim));
    }
  }
  return out;
}

NormStats fit_norm(const std::vector<MelSpectrogram>& corpus) {
  if (corpus.empty()) throw ContractError("fit_norm on an empty corpus");
  const std::size_t dim = corpus.front().frames.dim(1);
  NormStats stats{std::vector<double>(dim, std::numeric_limits<double>::infinity()),
                  std::vector<double>(dim, -std::numeric_limits<double>::infinity())};
  for (const auto& mel : corpus) {
    if (mel.state != MelState::raw) throw ContractError("fit_norm expects raw mels");
    if (mel.frames.dim(1) != dim) throw DimensionError("fit_norm: mixed mel widths");
    const auto& v = mel.frames.values();
    for (std::size_t t = 0; t < mel.num_frames(); ++t) {
      for (std::size_t d = 0; d < dim; ++d) {
        stats.min[d] = std::min(stats.min[d], v[t * dim + d]);
        stats.max[d] = std::max(stats.max[d], v[t * dim + d]);
      }
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    if (!(stats.max[d] > stats.min[d])) {
      throw DegenerateStatsError("fit_norm: dimension " + std::to_string(d) +
                                     " is constant over the corpus",
                                 d);
    }
  }
  return stats;
}

namespace {
void check(const MelSpectrogram& mel, const NormStats& stats, MelState expected) {
  if (mel.state != expected) {
    throw ContractError(expected == MelState::raw ? "normalize: mel is already normalized"
                                                  : "denormalize: mel is not normalized");
  }
  if (mel.frames.dim(1) != stats.dim()) {
    throw DimensionError("mel width " + std::to_string(mel.frames.dim(1)) + " vs stats width " +
                         std::to_string(stats.dim()));
  }
}
}  // namespace

MelSpectrogram normalize(const MelSpectrogram& mel, const NormStats& stats) {
  check(mel, stats, MelState::raw);
  MelSpectrogram out = mel;
  out.frames = mel.frames.clone();
  out.state = MelState::normalized;
  auto v = out.frames.mutable_data();
  const std::size_t dim = stats.dim();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t d = i % dim;
    const double y = kNormLow + (kNormHigh - kNormLow) * (v[i] - stats.min[d]) /
                                    (stats.max[d] - stats.min[d]);
    v[i] = std::clamp(y, kNormLow, kNormHigh);
  }
  return out;
}

MelSpectrogram denormalize(const MelSpectrogram& mel, const NormStats& stats) {
  check(mel, stats, MelState::normalized);
  MelSpectrogram out = mel;
  out.frames = mel.frames.clone();
  out.state = MelState::raw;
  auto v = out.frames.mutable_data();
  const std::size_t dim = stats.dim();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t d = i % dim;
    v[i] = stats.min[d] + (v[i] - kNormLow) * (stats.max[d] - stats.min[d]) /
                              (kNormHigh - kNormLow);
  }
  return out;
}

Tensor stats_to_tensor(const NormStats& stats) {
  std::vector<double> flat = stats.min;
  flat.insert(flat.end(), stats.max.begin(), stats.max.end());
  return Tensor::from({2, stats.dim()}, std::move(flat));
}

NormStats stats_from_tensor(const Tensor& t) {
  if (t.rank() != 2 || t.dim(0) != 2) {
    throw FormatError("stats tensor must be [2 x D], got " + num::shape_str(t.shape()));
  }
  const std::size_t dim = t.dim(1);
  const auto& v = t.values();
  NormStats stats{std::vector<double>(v.begin(), v.begin() + static_cast<long>(dim)),
                  std::vector<double>(v.begin() + static_cast<long>(dim), v.end())};
  for (std::size_t d = 0; d < dim; ++d) {
    if (!(stats.max[d] > stats.min[d])) {
      throw DegenerateStatsError("stats: max <= min in dimension " + std::to_string(d), d);
    }
  }
  return stats;
}

void save_stats(const std::filesystem::path& path, const NormStats& stats) {
  num::save_tnsr(path, stats_to_tensor(stats));
}

NormStats load_stats(const std::filesystem::path& path) {
  return stats_from_tensor(num::load_tnsr(path));
}

}  // namespace ppg2mel::features
