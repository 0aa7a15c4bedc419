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

#include "ppg2mel/synth/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/rng.h"

namespace ppg2mel::synth {

using features::kMelDim;
using num::Rng;
using num::Tensor;

namespace {
constexpr double kTemplateRange = 3.0;
// Confusion mass: the phoneme's own PPG class plus two confusable classes.
constexpr double kPrimaryMass = 0.8;
constexpr double kSecondMass = 0.15;
constexpr double kThirdMass = 0.05;

Tensor render_mel(const ToyLanguage& lang, const std::vector<std::size_t>& phonemes,
                  const std::vector<std::size_t>& durations, Rng& rng) {
  const std::size_t frames = std::accumulate(durations.begin(), durations.end(), std::size_t{0});
  Tensor mel = Tensor::zeros({frames, kMelDim});
  auto out = mel.mutable_data();
  const auto& tmpl = lang.mel_templates.values();
  std::size_t t = 0;
  for (std::size_t k = 0; k < phonemes.size(); ++k) {
    for (std::size_t f = 0; f < durations[k]; ++f, ++t) {
      for (std::size_t d = 0; d < kMelDim; ++d) {
        const double z = tmpl[phonemes[k] * kMelDim + d] + rng.normal(0.0, kTemplateNoise);
        out[t * kMelDim + d] = lang.raw_offset[d] + lang.raw_gain * z;
      }
    }
  }
  return mel;
}
}  // namespace

ToyLanguage gen_language(std::uint64_t seed, std::size_t n_phonemes, std::size_t ppg_dim) {
  if (n_phonemes < 2 || ppg_dim < n_phonemes) {
    throw ContractError("gen_language: need 2 <= n_phonemes <= ppg_dim");
  }
  Rng rng(num::derive_seed(seed, 0x1a49));
  ToyLanguage lang;
  lang.seed = seed;
  lang.n_phonemes = n_phonemes;
  lang.ppg_dim = ppg_dim;

  lang.mel_templates = Tensor::zeros({n_phonemes, kMelDim});
  for (double& v : lang.mel_templates.mutable_data()) v = rng.uniform(-kTemplateRange, kTemplateRange);

  lang.raw_offset.resize(kMelDim);
  for (std::size_t d = 0; d < kMelDim; ++d) {
    lang.raw_offset[d] = -5.0 - 3.0 * static_cast<double>(d) / (kMelDim - 1);
  }

  std::vector<std::size_t> classes(ppg_dim);
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng.engine());
  lang.confusion = Tensor::zeros({n_phonemes, ppg_dim});
  auto conf = lang.confusion.mutable_data();
  for (std::size_t p = 0; p < n_phonemes; ++p) {
    const std::size_t primary = classes[p];
    std::size_t second = primary, third = primary;
    while (second == primary) second = static_cast<std::size_t>(rng.uniform_int(0, ppg_dim - 1));
    while (third == primary || third == second)
      third = static_cast<std::size_t>(rng.uniform_int(0, ppg_dim - 1));
    conf[p * ppg_dim + primary] = kPrimaryMass;
    conf[p * ppg_dim + second] = kSecondMass;
    conf[p * ppg_dim + third] = kThirdMass;
  }
  return lang;
}

ToyLanguage perturb_speaker(const ToyLanguage& lang, std::uint64_t seed, double shift) {
  ToyLanguage out = lang;
  out.mel_templates = lang.mel_templates.clone();
  Rng rng(num::derive_seed(seed, 0xb5eaca));
  for (double& v : out.mel_templates.mutable_data()) {
    v = std::clamp(v + rng.normal(0.0, shift), -kTemplateRange - 0.5, kTemplateRange + 0.5);
  }
  return out;
}

Utterance gen_utterance(const ToyLanguage& lang, std::uint64_t seed, const LengthRange& range) {
  if (range.min_phones < 1 || range.min_phones > range.max_phones) {
    throw ContractError("gen_utterance: need 1 <= min_phones <= max_phones");
  }
  if (range.min_duration < 1 || range.min_duration > range.max_duration) {
    throw ContractError("gen_utterance: need 1 <= min_duration <= max_duration");
  }
  Rng rng(seed);
  Utterance utt;
  const auto count = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(range.min_phones),
                      static_cast<std::int64_t>(range.max_phones)));
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t p;
    do {
      p = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lang.n_phonemes) - 1));
    } while (k > 0 && p == utt.phonemes.back());
    utt.phonemes.push_back(p);
    utt.durations.push_back(static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(range.min_duration),
                        static_cast<std::int64_t>(range.max_duration))));
  }
  utt.mel.frames = render_mel(lang, utt.phonemes, utt.durations, rng);
  utt.mel.state = features::MelState::raw;

  const std::size_t t_mel = utt.mel.num_frames();
  const std::size_t t_ppg = (t_mel + kPpgSkip - 1) / kPpgSkip;
  std::vector<std::size_t> frame_index;  // mel frame -> position in phonemes
  for (std::size_t k = 0; k < count; ++k) frame_index.insert(frame_index.end(), utt.durations[k], k);

  utt.ppg = Tensor::zeros({t_ppg, lang.ppg_dim});
  auto ppg = utt.ppg.mutable_data();
  const auto& conf = lang.confusion.values();
  std::vector<double> noise(lang.ppg_dim);
  for (std::size_t j = 0; j < t_ppg; ++j) {
    const std::size_t center = std::min(j * kPpgSkip + 1, t_mel - 1);
    const std::size_t pos = frame_index[center];
    utt.oracle_align.push_back(pos);
    double total = 0.0;
    for (double& v : noise) total += (v = rng.uniform(0.0, 1.0));
    const std::size_t p = utt.phonemes[pos];
    for (std::size_t c = 0; c < lang.ppg_dim; ++c) {
      ppg[j * lang.ppg_dim + c] =
          kPpgClean * conf[p * lang.ppg_dim + c] + (1.0 - kPpgClean) * noise[c] / total;
    }
  }
  return utt;
}

std::vector<Utterance> gen_corpus(const ToyLanguage& lang, std::size_t n, std::uint64_t seed,
                                  const LengthRange& range) {
  if (n < 1) throw ContractError("gen_corpus: n must be >= 1");
  std::vector<Utterance> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Utterance u = gen_utterance(lang, num::derive_seed(seed, i, 0xc0), range);
    char id[32];
    std::snprintf(id, sizeof id, "utt%05zu", i);
    u.id = id;
    corpus.push_back(std::move(u));
  }
  return corpus;
}

features::MelSpectrogram native_reference(const ToyLanguage& lang, const Utterance& utt,
                                          std::uint64_t seed) {
  Rng rng(num::derive_seed(seed, 0x4e4));
  features::MelSpectrogram mel;
  mel.frames = render_mel(lang, utt.phonemes, utt.durations, rng);
  mel.state = features::MelState::raw;
  return mel;
}

std::vector<std::size_t> frame_phonemes(const Utterance& utt) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < utt.phonemes.size(); ++k)
    out.insert(out.end(), utt.durations[k], utt.phonemes[k]);
  return out;
}

std::vector<double> template_distances(const ToyLanguage& lang) {
  const std::size_t n = lang.n_phonemes;
  const auto& t = lang.mel_templates.values();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < kMelDim; ++d) {
        const double diff = t[a * kMelDim + d] - t[b * kMelDim + d];
        s += diff * diff;
      }
      dist[a * n + b] = std::sqrt(s);
    }
  }
  return dist;
}

}  // namespace ppg2mel::synth
