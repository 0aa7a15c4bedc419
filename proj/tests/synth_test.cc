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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/synth/corpus_io.h"
#include "ppg2mel/synth/synth.h"

namespace ppg2mel::synth {
namespace {

using features::kMelDim;

TEST(Language, DeterministicPerSeed) {
  ToyLanguage a = gen_language(3), b = gen_language(3), c = gen_language(4);
  EXPECT_EQ(a.mel_templates.values(), b.mel_templates.values());
  EXPECT_EQ(a.confusion.values(), b.confusion.values());
  EXPECT_NE(a.mel_templates.values(), c.mel_templates.values());
}

TEST(Language, ConfusionRowsAreStochastic) {
  ToyLanguage lang = gen_language(11);
  ASSERT_EQ(lang.confusion.dim(0), 12u);
  ASSERT_EQ(lang.confusion.dim(1), 87u);
  for (std::size_t p = 0; p < 12; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < 87; ++c) {
      ASSERT_GE(lang.confusion.at(p, c), 0.0);
      s += lang.confusion.at(p, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Language, TemplatesAreSeparated) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ToyLanguage lang = gen_language(seed);
    const auto& t = lang.mel_templates.values();
    for (std::size_t a = 0; a < 12; ++a) {
      for (std::size_t b = a + 1; b < 12; ++b) {
        double s = 0.0;
        for (std::size_t d = 0; d < kMelDim; ++d) {
          s += (t[a * kMelDim + d] - t[b * kMelDim + d]) * (t[a * kMelDim + d] - t[b * kMelDim + d]);
        }
        EXPECT_GT(std::sqrt(s), 0.5) << "seed " << seed << " pair " << a << "," << b;
      }
    }
  }
}

TEST(Utterance, SmallestCase) {
  ToyLanguage lang = gen_language(1);
  Utterance u = gen_utterance(lang, 7, {1, 1, 3, 3});
  EXPECT_EQ(u.phonemes.size(), 1u);
  EXPECT_EQ(u.mel_frames(), 3u);
  EXPECT_EQ(u.ppg_frames(), 1u);
  EXPECT_EQ(u.oracle_align, (std::vector<std::size_t>{0}));
}

TEST(Utterance, PpgArgmaxInConfusionSupport) {
  ToyLanguage lang = gen_language(2);
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; checked < 1000; ++seed) {
    Utterance u = gen_utterance(lang, seed, {});
    const auto frame_ph = frame_phonemes(u);
    for (std::size_t j = 0; j < u.ppg_frames() && checked < 1000; ++j, ++checked) {
      const std::size_t center = std::min(3 * j + 1, u.mel_frames() - 1);
      const std::size_t p = frame_ph[center];
      std::size_t best = 0;
      double sum = 0.0;
      for (std::size_t c = 0; c < lang.ppg_dim; ++c) {
        sum += u.ppg.at(j, c);
        if (u.ppg.at(j, c) > u.ppg.at(j, best)) best = c;
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
      ASSERT_GT(lang.confusion.at(p, best), 0.0);
      ASSERT_EQ(u.phonemes[u.oracle_align[j]], p);
    }
  }
}

TEST(Utterance, PpgLengthLaw) {
  ToyLanguage lang = gen_language(3);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Utterance u = gen_utterance(lang, seed, {1, 12, 3, 9});
    ASSERT_EQ(u.ppg_frames(), (u.mel_frames() + 2) / 3);
    ASSERT_GE(u.phonemes.size(), 1u);
    ASSERT_LE(u.phonemes.size(), 12u);
    for (std::size_t d : u.durations) {
      ASSERT_GE(d, 3u);
      ASSERT_LE(d, 9u);
    }
    ASSERT_TRUE(std::is_sorted(u.oracle_align.begin(), u.oracle_align.end()));
  }
}

TEST(Utterance, RejectsBadRange) {
  ToyLanguage lang = gen_language(3);
  EXPECT_THROW(gen_utterance(lang, 0, {0, 3, 3, 9}), ContractError);
  EXPECT_THROW(gen_utterance(lang, 0, {4, 3, 3, 9}), ContractError);
}

TEST(Corpus, FiftyUtterancesDistinctAndReproducible) {
  ToyLanguage lang = gen_language(4);
  auto a = gen_corpus(lang, 50, 99, {});
  auto b = gen_corpus(lang, 50, 99, {});
  ASSERT_EQ(a.size(), 50u);
  std::set<std::vector<double>> mels;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mel.frames.values(), b[i].mel.frames.values());
    EXPECT_EQ(a[i].ppg.values(), b[i].ppg.values());
    mels.insert(a[i].mel.frames.values());
  }
  EXPECT_EQ(mels.size(), 50u);
  EXPECT_THROW(gen_corpus(lang, 0, 1, {}), ContractError);
}

TEST(Corpus, NearestTemplateRecoversPhoneme) {
  ToyLanguage lang = gen_language(5);
  auto corpus = gen_corpus(lang, 40, 17, {});
  const auto& t = lang.mel_templates.values();
  std::size_t correct = 0, total = 0;
  for (const auto& u : corpus) {
    const auto truth = frame_phonemes(u);
    for (std::size_t f = 0; f < u.mel_frames(); ++f, ++total) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t p = 0; p < lang.n_phonemes; ++p) {
        double s = 0.0;
        for (std::size_t d = 0; d < kMelDim; ++d) {
          const double z = (u.mel.frames.at(f, d) - lang.raw_offset[d]) / lang.raw_gain;
          s += (z - t[p * kMelDim + d]) * (z - t[p * kMelDim + d]);
        }
        if (s < best_d) best_d = s, best = p;
      }
      correct += best == truth[f];
    }
  }
  EXPECT_GT(static_cast<double>(correct) / total, 0.99);
}

TEST(Corpus, NativeReferenceIsFreshNoise) {
  ToyLanguage lang = gen_language(6);
  Utterance u = gen_utterance(lang, 1, {});
  auto ref = native_reference(lang, u, 2);
  EXPECT_EQ(ref.frames.shape(), u.mel.frames.shape());
  EXPECT_NE(ref.frames.values(), u.mel.frames.values());
}

TEST(Corpus, SpeakerBKeepsRecognizer) {
  ToyLanguage a = gen_language(6);
  ToyLanguage b = perturb_speaker(a, 1);
  EXPECT_EQ(a.confusion.values(), b.confusion.values());
  EXPECT_NE(a.mel_templates.values(), b.mel_templates.values());
}

TEST(CorpusIo, RoundTrip) {
  ToyLanguage lang = gen_language(8);
  auto corpus = gen_corpus(lang, 5, 3, {});
  auto dir = std::filesystem::temp_directory_path() / "ppg2mel_corpus_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  save_corpus(dir, corpus, {"b", 3, 8});
  CorpusInfo info;
  auto back = load_corpus(dir, &info);
  std::filesystem::remove_all(dir);
  EXPECT_EQ(info.speaker, "b");
  EXPECT_EQ(info.seed, 3u);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].phonemes, corpus[i].phonemes);
    EXPECT_EQ(back[i].durations, corpus[i].durations);
    EXPECT_EQ(back[i].oracle_align, corpus[i].oracle_align);
    EXPECT_EQ(back[i].mel.frames.values(), corpus[i].mel.frames.values());
    EXPECT_EQ(back[i].ppg.values(), corpus[i].ppg.values());
  }
}

TEST(CorpusIo, PhonemeStrings) {
  EXPECT_EQ(phoneme_string({3, 11, 0}), "p03 p11 p00");
  EXPECT_EQ(parse_phonemes("p03 p11 p00"), (std::vector<std::size_t>{3, 11, 0}));
  EXPECT_THROW(parse_phonemes("p03 x1"), FormatError);
  EXPECT_THROW(parse_phonemes("p3z"), FormatError);
}

}  // namespace
}  // namespace ppg2mel::synth
