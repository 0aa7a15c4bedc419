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
#include <vector>

#include "ppg2mel/features/features.h"
#include "ppg2mel/num/tensor.h"

// Seeded toy corpora: phoneme strings with durations, the mel frames they
// render to, and the PPGs an ideal-but-noisy recognizer would emit at the
// skip-3 frame rate.
namespace ppg2mel::synth {

inline constexpr std::size_t kPpgDim = 87;
inline constexpr std::size_t kPpgSkip = 3;

struct ToyLanguage {
  std::uint64_t seed = 0;
  std::size_t n_phonemes = 12;
  std::size_t ppg_dim = kPpgDim;
  num::Tensor mel_templates;  // [n_phonemes x 80], normalized scale
  num::Tensor confusion;      // [n_phonemes x ppg_dim], rows sum to 1
  // raw = raw_offset[d] + raw_gain * normalized-scale value
  std::vector<double> raw_offset;
  double raw_gain = 1.5;
};

struct LengthRange {
  std::size_t min_phones = 3;
  std::size_t max_phones = 8;
  std::size_t min_duration = 3;  // mel frames per phoneme
  std::size_t max_duration = 9;
};

struct Utterance {
  std::string id;
  std::vector<std::size_t> phonemes;
  std::vector<std::size_t> durations;  // mel frames per phoneme
  features::MelSpectrogram mel;        // raw, [T_mel x 80]
  num::Tensor ppg;                     // [ceil(T_mel / 3) x ppg_dim]
  // Index into `phonemes` active at each PPG frame's mel-time center.
  std::vector<std::size_t> oracle_align;

  std::size_t mel_frames() const { return mel.num_frames(); }
  std::size_t ppg_frames() const { return ppg.dim(0); }
};

inline constexpr double kTemplateNoise = 0.05;
inline constexpr double kPpgClean = 0.9;

ToyLanguage gen_language(std::uint64_t seed, std::size_t n_phonemes = 12,
                         std::size_t ppg_dim = kPpgDim);

// Second toy speaker: same phone set and recognizer behaviour, templates
// shifted by N(0, shift^2) per dimension.
ToyLanguage perturb_speaker(const ToyLanguage& lang, std::uint64_t seed, double shift = 0.5);

Utterance gen_utterance(const ToyLanguage& lang, std::uint64_t seed, const LengthRange& range);

std::vector<Utterance> gen_corpus(const ToyLanguage& lang, std::size_t n, std::uint64_t seed,
                                  const LengthRange& range);

// Same phonemes and durations with a fresh noise draw; stands in for a native
// rendition of the same text.
features::MelSpectrogram native_reference(const ToyLanguage& lang, const Utterance& utt,
                                          std::uint64_t seed);

// Phoneme id rendered at mel frame t.
std::vector<std::size_t> frame_phonemes(const Utterance& utt);

// Pairwise L2 distance matrix of the templates.
std::vector<double> template_distances(const ToyLanguage& lang);

}  // namespace ppg2mel::synth
