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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppg2mel/synth/synth.h"

namespace ppg2mel::synth {

struct CorpusInfo {
  std::string speaker = "a";
  std::uint64_t seed = 0;
  std::uint64_t language_seed = 0;
};

// Writes <dir>/manifest.json plus <id>.mel.tnsr and <id>.ppg.tnsr per
// utterance. The directory must exist.
void save_corpus(const std::filesystem::path& dir, const std::vector<Utterance>& corpus,
                 const CorpusInfo& info);

// FormatError on a malformed manifest or missing file.
std::vector<Utterance> load_corpus(const std::filesystem::path& dir, CorpusInfo* info = nullptr);

// "p03 p11 p07"
std::string phoneme_string(const std::vector<std::size_t>& phonemes);
std::vector<std::size_t> parse_phonemes(const std::string& text);

}  // namespace ppg2mel::synth
