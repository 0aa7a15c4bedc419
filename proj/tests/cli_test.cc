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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.h"
#include "run_config.h"
#include "ppg2mel/num/tnsr_io.h"
#include "ppg2mel/synth/corpus_io.h"

namespace ppg2mel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("ppg2mel_cli_" + std::string(
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  std::string write_config(const std::string& name, const json& j) const {
    std::ofstream(path(name)) << j.dump(2);
    return path(name);
  }

  // A micro model trained for a handful of steps on a tiny corpus.
  json micro_config(const std::string& base, std::size_t steps = 4) const {
    return {{"version", 1},
            {"model", {{"base", base}}},
            {"train", {{"max_steps", steps}, {"batch_size", 2}, {"val_every", 2}, {"seed", 3}}},
            {"data", {{"train_n", 4}, {"val_n", 2}, {"test_n", 1}, {"max_phones", 4}}}};
  }

  fs::path root_;
};

TEST(RunConfig, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(PPG2MEL_SOURCE_DIR) / "configs")) {
    EXPECT_NO_THROW(load_run_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 3u);
}

TEST_F(CliTest, GenWritesCorpusAndManifest) {
  Result r = run_cli({"gen", "--seed", "1", "--n", "50", "--out", path("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(synth::load_corpus(path("c")).size(), 50u);
  json man = json::parse(slurp(root_ / "c" / "run_manifest.json"));
  for (const char* key : {"command", "config_path", "seed", "git_describe", "out_dir", "started_at", "finished_at"}) {
    EXPECT_TRUE(man.contains(key)) << key;
  }
  EXPECT_EQ(man["command"], "gen");
  EXPECT_EQ(man["seed"], 1);
}

TEST_F(CliTest, GenIsByteIdenticalOnRerun) {
  ASSERT_EQ(run_cli({"gen", "--seed", "4", "--n", "5", "--out", path("a")}).code, 0);
  ASSERT_EQ(run_cli({"gen", "--seed", "4", "--n", "5", "--out", path("b")}).code, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(root_ / "a")) {
    if (e.path().filename() == "run_manifest.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(root_ / "b" / e.path().filename())) << e.path();
    ++compared;
  }
  EXPECT_EQ(compared, 11u);
}

TEST_F(CliTest, GenUsageErrors) {
  EXPECT_EQ(run_cli({"gen", "--seed", "1", "--n", "0", "--out", path("c")}).code, kUsage);
  EXPECT_FALSE(fs::exists(path("c")));
  EXPECT_EQ(run_cli({"gen", "--seed", "1", "--n", "2", "--out", path("c"), "--speaker", "z"}).code, kUsage);
  ASSERT_EQ(run_cli({"gen", "--seed", "1", "--n", "2", "--out", path("c")}).code, 0);
  Result again = run_cli({"gen", "--seed", "1", "--n", "2", "--out", path("c")});
  EXPECT_EQ(again.code, kUsage);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(run_cli({"gen", "--seed", "1", "--n", "2", "--out", path("c"), "--force"}).code, 0);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run_cli({}).code, kUsage);
}

TEST_F(CliTest, TrainRejectsBadConfigListingKeys) {
  ASSERT_EQ(run_cli({"gen", "--seed", "1", "--n", "3", "--out", path("c")}).code, 0);
  json bad = {{"version", 1},
              {"model", {{"base", "s1/micro"}, {"encoder", "rnn"}, {"colour", 1}}},
              {"train", {{"lr", -1}, {"batchsize", 2}}}};
  Result r = run_cli({"train", "--config", write_config("bad.json", bad), "--corpus", path("c"), "--out", path("o")});
  EXPECT_EQ(r.code, kDataError);
  for (const char* key : {"model.encoder", "model.colour", "train.lr", "train.batchsize"}) {
    EXPECT_NE(r.err.find(key), std::string::npos) << key << " not in: " << r.err;
  }
  EXPECT_FALSE(fs::exists(path("o")));
}

TEST_F(CliTest, TrainFinetuneConvertRoundTrip) {
  ASSERT_EQ(run_cli({"gen", "--seed", "1", "--n", "6", "--out", path("a")}).code, 0);
  ASSERT_EQ(run_cli({"gen", "--seed", "2", "--n", "4", "--out", path("b"), "--speaker", "b"}).code, 0);
  const std::string cfg = write_config("s3.json", micro_config("s3/micro"));
  Result tr = run_cli({"train", "--config", cfg, "--corpus", path("a"), "--out", path("t")});
  ASSERT_EQ(tr.code, 0) << tr.err;
  for (const char* f : {"model.ckpt", "model.ckpt.json", "model.ckpt.stats.tnsr", "loss.csv", "train_state.tnsr",
                        "summary.json", "run_manifest.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "t" / f)) << f;
  }
  json summary = json::parse(slurp(root_ / "t" / "summary.json"));
  EXPECT_TRUE(std::isfinite(summary["val_mse"].get<double>()));
  EXPECT_EQ(summary["steps"], 4);

  Result ft = run_cli({"finetune", "--from", path("t/model.ckpt"), "--config", cfg, "--corpus", path("b"),
                       "--out", path("f")});
  EXPECT_EQ(ft.code, 0) << ft.err;
  const std::string other = write_config("s1.json", micro_config("s1/micro"));
  Result bad = run_cli({"finetune", "--from", path("t/model.ckpt"), "--config", other, "--corpus", path("b"),
                        "--out", path("g")});
  EXPECT_EQ(bad.code, kDataError);
  EXPECT_NE(bad.err.find("config"), std::string::npos) << bad.err;

  const auto utt = synth::load_corpus(path("b"))[0];
  num::save_tnsr(root_ / "ppg.tnsr", utt.ppg);
  num::save_tnsr(root_ / "ref.tnsr", utt.mel.frames);
  Result missing = run_cli({"convert", "--checkpoint", path("t/model.ckpt"), "--ppg", path("ppg.tnsr"), "--phones",
                            synth::phoneme_string(utt.phonemes), "--out", path("x")});
  EXPECT_EQ(missing.code, kUsage);
  EXPECT_NE(missing.err.find("use_mel_ref"), std::string::npos) << missing.err;
  Result no_phones = run_cli({"convert", "--checkpoint", path("t/model.ckpt"), "--ppg", path("ppg.tnsr"),
                              "--ref-mel", path("ref.tnsr"), "--out", path("x")});
  EXPECT_EQ(no_phones.code, kUsage);
  EXPECT_NE(no_phones.err.find("use_phone_ref"), std::string::npos) << no_phones.err;

  Result cv = run_cli({"convert", "--checkpoint", path("t/model.ckpt"), "--ppg", path("ppg.tnsr"), "--ref-mel",
                       path("ref.tnsr"), "--phones", synth::phoneme_string(utt.phonemes), "--out", path("x"),
                       "--max-steps", "7"});
  ASSERT_EQ(cv.code, 0) << cv.err;
  num::Tensor mel = num::load_tnsr(root_ / "x" / "mel_after.tnsr");
  EXPECT_EQ(mel.dim(1), 80u);
  json conv = json::parse(slurp(root_ / "x" / "summary.json"));
  const std::size_t steps = conv["decoder_steps"];
  EXPECT_EQ(mel.dim(0), 2 * steps);
  std::istringstream pgm(slurp(root_ / "x" / "alignment.pgm"));
  std::string magic;
  std::size_t w = 0, h = 0;
  pgm >> magic >> w >> h;
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, utt.ppg_frames());
  EXPECT_EQ(h, steps);
  EXPECT_TRUE(fs::exists(root_ / "x" / "stop.csv"));
  EXPECT_TRUE(fs::exists(root_ / "x" / "alignment.csv"));
}

TEST_F(CliTest, GradcheckFlagsInjectedBug) {
  Result r = run_cli({"gradcheck", "--inject-bug", "--entries", "1"});
  EXPECT_EQ(r.code, kNumericError);
  std::istringstream table(r.out);
  std::string line;
  std::size_t fails = 0, rows = 0;
  while (std::getline(table, line)) {
    if (line.find("PASS") != std::string::npos) ++rows;
    if (line.find("FAIL") != std::string::npos) {
      ++rows;
      ++fails;
      EXPECT_EQ(line.rfind("injected_bug", 0), 0u) << line;
    }
  }
  EXPECT_EQ(fails, 1u);
  EXPECT_GT(rows, 30u);
}

TEST_F(CliTest, AblateReportsRequestedArms) {
  const std::string cfg = write_config("abl.json", micro_config("s1/micro", 2));
  Result r = run_cli({"ablate", "--systems", "baseline,s1", "--config", cfg, "--out", path("ab")});
  ASSERT_EQ(r.code, 0) << r.err;
  json rep = json::parse(slurp(root_ / "ab" / "report.json"));
  ASSERT_EQ(rep["systems"].size(), 2u);
  for (const auto& arm : rep["systems"]) {
    EXPECT_EQ(arm["status"], "ok");
    for (const char* m : {"1x", "1.5x", "2x"}) {
      EXPECT_TRUE(arm["alignment_error"].contains(m)) << m;
      EXPECT_TRUE(fs::exists(root_ / "ab" / arm["system"].get<std::string>() / (std::string("align_") + m + ".pgm")));
    }
    EXPECT_TRUE(std::isfinite(arm["val_mse"].get<double>()));
  }
  EXPECT_TRUE(json::parse(slurp(root_ / "ab" / "timing.json")).contains("s1"));
  EXPECT_EQ(run_cli({"ablate", "--systems", "s1,s9", "--config", cfg, "--out", path("bad")}).code, kUsage);
}

}  // namespace
}  // namespace ppg2mel::cli
