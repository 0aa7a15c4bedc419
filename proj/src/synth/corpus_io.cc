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

#include "ppg2mel/synth/corpus_io.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::synth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string phoneme_string(const std::vector<std::size_t>& phonemes) {
  std::string out;
  char buf[16];
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%sp%02zu", i ? " " : "", phonemes[i]);
    out += buf;
  }
  return out;
}

std::vector<std::size_t> parse_phonemes(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok.size() < 2 || tok[0] != 'p') throw FormatError("bad phoneme token '" + tok + "'");
    try {
      std::size_t used = 0;
      const unsigned long id = std::stoul(tok.substr(1), &used);
      if (used != tok.size() - 1) throw FormatError("bad phoneme token '" + tok + "'");
      out.push_back(id);
    } catch (const std::logic_error&) {
      throw FormatError("bad phoneme token '" + tok + "'");
    }
  }
  return out;
}

void save_corpus(const fs::path& dir, const std::vector<Utterance>& corpus,
                 const CorpusInfo& info) {
  json manifest;
  manifest["version"] = 1;
  manifest["speaker"] = info.speaker;
  manifest["seed"] = info.seed;
  manifest["language_seed"] = info.language_seed;
  json utts = json::array();
  for (const auto& u : corpus) {
    const std::string mel_file = u.id + ".mel.tnsr";
    const std::string ppg_file = u.id + ".ppg.tnsr";
    num::save_tnsr(dir / mel_file, u.mel.frames);
    num::save_tnsr(dir / ppg_file, u.ppg);
    utts.push_back({{"id", u.id},
                    {"phonemes", phoneme_string(u.phonemes)},
                    {"durations", u.durations},
                    {"oracle_align", u.oracle_align},
                    {"mel", mel_file},
                    {"ppg", ppg_file}});
  }
  manifest["utterances"] = std::move(utts);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

std::vector<Utterance> load_corpus(const fs::path& dir, CorpusInfo* info) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw FormatError("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
    if (manifest.at("version").get<int>() != 1) throw FormatError("unsupported corpus version");
    if (info) {
      info->speaker = manifest.at("speaker").get<std::string>();
      info->seed = manifest.at("seed").get<std::uint64_t>();
      info->language_seed = manifest.at("language_seed").get<std::uint64_t>();
    }
    std::vector<Utterance> corpus;
    for (const auto& entry : manifest.at("utterances")) {
      Utterance u;
      u.id = entry.at("id").get<std::string>();
      u.phonemes = parse_phonemes(entry.at("phonemes").get<std::string>());
      u.durations = entry.at("durations").get<std::vector<std::size_t>>();
      u.oracle_align = entry.at("oracle_align").get<std::vector<std::size_t>>();
      u.mel.frames = num::load_tnsr(dir / entry.at("mel").get<std::string>());
      u.mel.state = features::MelState::raw;
      u.ppg = num::load_tnsr(dir / entry.at("ppg").get<std::string>());
      if (u.mel.frames.rank() != 2 || u.mel.frames.dim(1) != features::kMelDim ||
          u.ppg.rank() != 2 || u.phonemes.size() != u.durations.size() ||
          u.oracle_align.size() != u.ppg.dim(0) ||
          u.ppg.dim(0) != (u.mel.frames.dim(0) + kPpgSkip - 1) / kPpgSkip) {
        throw FormatError("utterance " + u.id + " has inconsistent shapes");
      }
      corpus.push_back(std::move(u));
    }
    if (corpus.empty()) throw FormatError("corpus manifest lists no utterances");
    return corpus;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corpus manifest: ") + e.what());
  }
}

}  // namespace ppg2mel::synth
