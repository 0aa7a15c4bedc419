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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppg2mel/attention/attention.h"
#include "ppg2mel/features/features.h"
#include "ppg2mel/model/checkpoint.h"
#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/tnsr_io.h"
#include "ppg2mel/synth/corpus_io.h"
#include "ppg2mel/synth/synth.h"
#include "ppg2mel/train/ablation.h"
#include "ppg2mel/train/train.h"
#include "ppg2mel/verify/suite.h"
#include "run_config.h"

#ifndef PPG2MEL_GIT_DESCRIBE
#define PPG2MEL_GIT_DESCRIBE "unknown"
#endif

namespace ppg2mel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string git_describe() { return PPG2MEL_GIT_DESCRIBE; }

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

// One per run, written into --out when the command finishes or fails.
struct RunManifest {
  json j;
  fs::path out;

  RunManifest(const std::string& command, const std::vector<std::string>& args, const fs::path& out_dir)
      : out(out_dir) {
    j["version"] = 1;
    j["command"] = command;
    j["args"] = args;
    j["config_path"] = nullptr;
    j["seed"] = nullptr;
    j["git_describe"] = git_describe();
    j["out_dir"] = out_dir.string();
    j["started_at"] = utc_now();
  }

  void finish(int code, const std::string& error) {
    j["finished_at"] = utc_now();
    j["exit_code"] = code;
    if (!error.empty()) j["error"] = error;
    write_json(out / "run_manifest.json", j);
  }
};

struct Session {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
  std::optional<RunManifest> manifest;

  RunManifest& open_out(const std::string& command, const fs::path& dir) {
    fs::create_directories(dir);
    manifest.emplace(command, args, dir);
    return *manifest;
  }
};

// Prints every `every` steps; safe to call from several training threads.
train::StepCallback progress(std::ostream& err, const std::string& tag, std::size_t every = 100) {
  static std::mutex mu;
  return [&err, tag, every](const train::LossRecord& r) {
    if (r.step % every != 0) return;
    std::lock_guard<std::mutex> lock(mu);
    err << tag << "step " << r.step << " train_mse " << r.train_mse;
    if (!std::isnan(r.val_mse)) err << " val_mse " << r.val_mse;
    err << '\n';
  };
}

std::vector<features::MelSpectrogram> mels_of(const std::vector<synth::Utterance>& corpus) {
  std::vector<features::MelSpectrogram> mels;
  for (const auto& u : corpus) mels.push_back(u.mel);
  return mels;
}

// Holds out the last round(n * fraction) utterances (at least one when the
// fraction is positive and n > 1).
void split_corpus(std::vector<synth::Utterance> all, double fraction, std::vector<synth::Utterance>& train_part,
                  std::vector<synth::Utterance>& val_part) {
  std::size_t n_val = 0;
  if (fraction > 0.0 && all.size() > 1) {
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(all.size()))));
    n_val = std::min(n_val, all.size() - 1);
  }
  val_part.assign(all.end() - static_cast<std::ptrdiff_t>(n_val), all.end());
  all.resize(all.size() - n_val);
  train_part = std::move(all);
}

// Shared tail of train and finetune: everything a later convert or resume
// needs, plus the loss curve and a numeric summary.
void write_training_outputs(const fs::path& out, model::Model& m, const train::TrainState& state,
                            const features::NormStats& stats, const std::vector<train::Example>& data,
                            const std::vector<train::Example>& val) {
  train::save_train_state(out / "train_state.tnsr", m, state);
  train::restore(m.params(), state.best_params);
  const fs::path ckpt = out / "model.ckpt";
  model::save_model(ckpt, m);
  features::save_stats(train::stats_path_for(ckpt), stats);
  train::write_loss_csv(out / "loss.csv", state.curve);
  json summary;
  summary["system"] = m.config().name;
  summary["param_count"] = m.param_count();
  summary["steps"] = state.step;
  summary["best_step"] = state.best_step;
  summary["train_utterances"] = data.size();
  summary["val_utterances"] = val.size();
  summary["train_mse"] = train::teacher_forced_mse(m, data);
  summary["val_mse"] = train::teacher_forced_mse(m, val.empty() ? data : val);
  write_json(out / "summary.json", summary);
}

// ---- commands ----

struct GenArgs {
  std::uint64_t seed = 0;
  std::uint64_t language_seed = 1;
  std::size_t n = 0;
  std::string out;
  std::string speaker = "a";
  bool force = false;
};

int cmd_gen(Session& s, const GenArgs& a) {
  if (a.n < 1) throw UsageError("--n must be at least 1");
  if (fs::exists(a.out) && !(fs::is_directory(a.out) && fs::is_empty(a.out)) && !a.force) {
    throw UsageError("output directory " + a.out + " is not empty (pass --force to overwrite)");
  }
  RunManifest& man = s.open_out("gen", a.out);
  man.j["seed"] = a.seed;
  man.j["language_seed"] = a.language_seed;
  man.j["speaker"] = a.speaker;
  synth::ToyLanguage lang = synth::gen_language(a.language_seed);
  if (a.speaker == "b") lang = synth::perturb_speaker(lang, num::derive_seed(a.language_seed, 0xb));
  const auto corpus = synth::gen_corpus(lang, a.n, a.seed, {});
  synth::save_corpus(a.out, corpus, {a.speaker, a.seed, a.language_seed});
  s.out << "wrote " << corpus.size() << " utterances to " << a.out << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string corpus;
  std::string val_corpus;
  std::string out;
  std::string resume;
  std::string from;
};

struct Prepared {
  std::vector<synth::Utterance> train_utts, val_utts;
  features::NormStats stats;
  std::vector<train::Example> data, val;
};

Prepared prepare(const TrainArgs& a, double val_fraction) {
  Prepared p;
  auto corpus = synth::load_corpus(a.corpus);
  if (!a.val_corpus.empty()) {
    p.train_utts = std::move(corpus);
    p.val_utts = synth::load_corpus(a.val_corpus);
  } else {
    split_corpus(std::move(corpus), val_fraction, p.train_utts, p.val_utts);
  }
  p.stats = features::fit_norm(mels_of(p.train_utts));
  p.data = train::make_examples(p.train_utts, p.stats);
  p.val = train::make_examples(p.val_utts, p.stats);
  return p;
}

int cmd_train(Session& s, const TrainArgs& a) {
  const RunConfig rc = load_run_config(a.config);
  Prepared p = prepare(a, rc.train.val_fraction);
  RunManifest& man = s.open_out("train", a.out);
  man.j["config_path"] = a.config;
  man.j["seed"] = rc.train.seed;
  man.j["corpus"] = a.corpus;
  write_json(fs::path(a.out) / "config.json", to_json(rc));

  model::Model m(rc.model, rc.train.seed);
  train::TrainState state;
  if (!a.resume.empty()) state = train::load_train_state(a.resume, m);
  state = train::train(m, p.data, p.val, rc.train, std::move(state), progress(s.err, ""));
  write_training_outputs(a.out, m, state, p.stats, p.data, p.val);
  s.out << "best val_mse " << state.best_val << " at step " << state.best_step << '\n';
  return kOk;
}

int cmd_finetune(Session& s, const TrainArgs& a) {
  model::Model m = model::load_model(a.from);
  train::TrainConfig tc;
  tc.max_steps = 1000;
  if (!a.config.empty()) {
    const RunConfig rc = load_run_config(a.config);
    tc = rc.train;
    m = model::Model(rc.model, rc.train.seed);
  }
  Prepared p = prepare(a, tc.val_fraction);
  RunManifest& man = s.open_out("finetune", a.out);
  man.j["config_path"] = a.config.empty() ? json(nullptr) : json(a.config);
  man.j["seed"] = tc.seed;
  man.j["from"] = a.from;
  man.j["corpus"] = a.corpus;
  train::TrainState state = train::finetune(m, a.from, p.data, p.val, tc, progress(s.err, ""));
  write_training_outputs(a.out, m, state, p.stats, p.data, p.val);
  s.out << "best val_mse " << state.best_val << " at step " << state.best_step << '\n';
  return kOk;
}

struct ConvertArgs {
  std::string checkpoint;
  std::string ppg;
  std::string ref_mel;
  std::string phones;
  std::string out;
  std::size_t max_steps = 0;
};

int cmd_convert(Session& s, const ConvertArgs& a) {
  const model::Model m = model::load_model(a.checkpoint);
  const model::SystemConfig& cfg = m.config();
  if (cfg.use_mel_ref && a.ref_mel.empty()) {
    throw UsageError("--ref-mel is required: the checkpoint config sets use_mel_ref");
  }
  if (cfg.use_phone_ref && a.phones.empty()) {
    throw UsageError("--phones is required: the checkpoint config sets use_phone_ref");
  }
  const features::NormStats stats = features::load_stats(train::stats_path_for(a.checkpoint));
  const num::Tensor ppg = num::load_tnsr(a.ppg);
  if (ppg.rank() != 2 || ppg.dim(1) != cfg.ppg_dim) {
    throw DimensionError("--ppg must be [T x " + std::to_string(cfg.ppg_dim) + "], got " +
                         num::shape_str(ppg.shape()));
  }
  model::RefInputs refs;
  if (!a.ref_mel.empty()) {
    features::MelSpectrogram raw;
    raw.frames = num::load_tnsr(a.ref_mel);
    refs.mel = features::normalize(raw, stats).frames;
  }
  if (!a.phones.empty()) refs.phones = synth::parse_phonemes(a.phones);

  RunManifest& man = s.open_out("convert", a.out);
  man.j["checkpoint"] = a.checkpoint;
  man.j["ppg"] = a.ppg;

  const std::size_t r = cfg.reduction_factor;
  model::DecodeRequest req;
  req.mode = model::DecodeMode::free_running;
  // Twice the nominal length: three mel frames per PPG frame.
  req.max_steps = a.max_steps ? a.max_steps : 2 * ((3 * ppg.dim(0) + r - 1) / r);
  num::NoGradGuard no_grad;
  const model::DecodeResult res = m.decode(m.encode(ppg, refs, {}), req, {});

  const fs::path out(a.out);
  features::MelSpectrogram mel;
  mel.frames = res.mel_after;
  mel.state = features::MelState::normalized;
  num::save_tnsr(out / "mel_after.tnsr", features::denormalize(mel, stats).frames);
  num::save_tnsr(out / "alignment.tnsr", res.alignment);
  attention::write_alignment_pgm(out / "alignment.pgm", res.alignment);
  attention::write_alignment_csv(out / "alignment.csv", res.alignment);
  {
    std::ofstream os(out / "stop.csv", std::ios::binary);
    os << "step,logit,probability\n";
    char buf[96];
    for (std::size_t i = 0; i < res.stop_logits.numel(); ++i) {
      const double z = res.stop_logits[i];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, z, 1.0 / (1.0 + std::exp(-z)));
      os << buf;
    }
  }
  write_json(out / "summary.json", {{"decoder_steps", res.steps},
                                    {"mel_frames", res.mel_after.dim(0)},
                                    {"mel_dim", res.mel_after.dim(1)},
                                    {"stopped", res.stopped},
                                    {"encoder_steps", res.alignment.dim(1)}});
  s.out << "decoded " << res.steps << " steps (" << res.mel_after.dim(0) << " frames)"
        << (res.stopped ? "" : ", hit max_steps") << '\n';
  return kOk;
}

struct GradcheckArgs {
  std::string scale = "micro";
  bool inject_bug = false;
  std::size_t entries = 6;
  std::string out;
};

int cmd_gradcheck(Session& s, const GradcheckArgs& a) {
  verify::SuiteOptions opt;
  opt.scale = a.scale == "small" ? model::Scale::desk : model::Scale::micro;
  opt.inject_bug = a.inject_bug;
  opt.entries_per_tensor = a.entries;
  if (!a.out.empty()) s.open_out("gradcheck", a.out);
  const auto rows = verify::run_suite(opt);
  const std::string table = verify::format_table(rows);
  s.out << table;
  if (!a.out.empty()) {
    std::ofstream os(fs::path(a.out) / "gradcheck.txt", std::ios::binary);
    os << table;
  }
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.pass(); });
  s.out << (failed ? std::to_string(failed) + " component(s) failed\n" : "all components passed\n");
  return failed ? kNumericError : kOk;
}

struct AblateArgs {
  std::string systems = "baseline,s1,s2,s3";
  std::string config;
  std::string out;
  unsigned jobs = 1;
};

std::vector<model::SystemKind> parse_systems(const std::string& list) {
  std::vector<model::SystemKind> kinds;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    try {
      const auto k = model::parse_system(name);
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--systems: ") + e.what());
    }
  }
  if (kinds.empty()) throw UsageError("--systems: no systems given");
  return kinds;
}

train::AblationData ablation_data(const DataConfig& d) {
  train::AblationData data;
  data.lang = synth::gen_language(d.language_seed);
  data.train = synth::gen_corpus(data.lang, d.train_n, num::derive_seed(d.corpus_seed, 1), d.lengths);
  if (d.val_n > 0) data.val = synth::gen_corpus(data.lang, d.val_n, num::derive_seed(d.corpus_seed, 2), d.lengths);
  const std::size_t L = data.max_train_ppg();
  for (double mult : train::kLengthMultipliers) {
    const auto frames = static_cast<std::size_t>(std::lround(mult * static_cast<double>(L)));
    data.tests.push_back(
        {mult, frames, train::utterances_of_length(data.lang, frames, d.test_n, num::derive_seed(d.corpus_seed, 3, frames))});
  }
  data.reference_seed = num::derive_seed(d.corpus_seed, 4);
  return data;
}

int cmd_ablate(Session& s, const AblateArgs& a) {
  const auto systems = parse_systems(a.systems);
  const RunConfig rc = load_run_config(a.config);
  RunManifest& man = s.open_out("ablate", a.out);
  man.j["config_path"] = a.config;
  man.j["seed"] = rc.train.seed;
  write_json(fs::path(a.out) / "config.json", to_json(rc));

  const train::AblationData data = ablation_data(rc.data);
  std::map<model::SystemKind, train::StepCallback> printers;
  for (auto k : systems) printers[k] = progress(s.err, model::system_name(k) + " ");
  const train::AblationReport report = train::run_ablation(
      systems, rc.model, data, rc.train, a.jobs,
      [&](model::SystemKind k, const train::LossRecord& r) { printers.at(k)(r); });

  const fs::path out(a.out);
  write_json(out / "report.json", train::report_json(report));
  write_json(out / "timing.json", train::timing_json(report));
  int code = kOk;
  for (const auto& arm : report.arms) {
    const std::string name = model::system_name(arm.system);
    if (!arm.ok) {
      s.err << name << " failed: " << arm.error << '\n';
      code = std::max(code, arm.numeric_failure ? int(kNumericError) : int(kDataError));
      continue;
    }
    const fs::path dir = out / name;
    fs::create_directories(dir);
    model::Model m(arm.config, rc.train.seed);
    train::restore(m.params(), arm.best_params);
    model::save_model(dir / "model.ckpt", m);
    features::save_stats(train::stats_path_for(dir / "model.ckpt"), report.stats);
    train::write_loss_csv(dir / "loss.csv", arm.curve);
    for (const auto& ev : arm.lengths) {
      if (!ev.example_alignment.defined()) continue;
      const std::string label = train::multiplier_label(ev.multiplier);
      attention::write_alignment_pgm(dir / ("align_" + label + ".pgm"), ev.example_alignment);
      attention::write_alignment_csv(dir / ("align_" + label + ".csv"), ev.example_alignment);
    }
    s.out << name << ": val_mse " << arm.val_mse;
    for (const auto& ev : arm.lengths) {
      s.out << "  align@" << train::multiplier_label(ev.multiplier) << ' ' << ev.alignment_error;
    }
    s.out << '\n';
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PPG-to-mel conversion toolkit: toy data, training, conversion, verification"};
  app.require_subcommand(1);
  std::function<int(Session&)> action;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a toy corpus");
  g->add_option("--seed", gen.seed, "Corpus seed")->required();
  g->add_option("--n", gen.n, "Number of utterances")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--speaker", gen.speaker, "Toy speaker")->check(CLI::IsMember({"a", "b"}));
  g->add_option("--language-seed", gen.language_seed, "Seed of the shared toy language");
  g->add_flag("--force", gen.force, "Write into a non-empty directory");
  g->callback([&] { action = [&](Session& s) { return cmd_gen(s, gen); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a conversion model");
  t->add_option("--config", tr.config, "Run config JSON")->required();
  t->add_option("--corpus", tr.corpus, "Corpus directory")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--val-corpus", tr.val_corpus, "Separate validation corpus");
  t->add_option("--resume", tr.resume, "Training state to continue from");
  t->callback([&] { action = [&](Session& s) { return cmd_train(s, tr); }; });

  TrainArgs ft;
  auto* f = app.add_subcommand("finetune", "Fine-tune a trained checkpoint on a new corpus");
  f->add_option("--from", ft.from, "Pretrained checkpoint")->required();
  f->add_option("--corpus", ft.corpus, "Corpus directory")->required();
  f->add_option("--out", ft.out, "Output directory")->required();
  f->add_option("--config", ft.config, "Run config JSON (model section must match the checkpoint)");
  f->add_option("--val-corpus", ft.val_corpus, "Separate validation corpus");
  f->callback([&] { action = [&](Session& s) { return cmd_finetune(s, ft); }; });

  ConvertArgs cv;
  auto* c = app.add_subcommand("convert", "Free-running conversion of one PPG sequence");
  c->add_option("--checkpoint", cv.checkpoint, "Model checkpoint")->required();
  c->add_option("--ppg", cv.ppg, "PPG TNSR [T x 87]")->required();
  c->add_option("--ref-mel", cv.ref_mel, "Raw reference mel TNSR [T x 80]");
  c->add_option("--phones", cv.phones, "Reference phonemes, e.g. \"p03 p11\"");
  c->add_option("--out", cv.out, "Output directory")->required();
  c->add_option("--max-steps", cv.max_steps, "Decoder step cap (default: twice the nominal length)");
  c->callback([&] { action = [&](Session& s) { return cmd_convert(s, cv); }; });

  GradcheckArgs gc;
  auto* k = app.add_subcommand("gradcheck", "Finite-difference check of primitives and models");
  k->add_option("--scale", gc.scale, "Model scale")->check(CLI::IsMember({"micro", "small"}));
  k->add_flag("--inject-bug", gc.inject_bug, "Include a primitive with a wrong gradient");
  k->add_option("--entries", gc.entries, "Entries checked per parameter tensor (0 = all)");
  k->add_option("--out", gc.out, "Optional output directory for the table");
  k->callback([&] { action = [&](Session& s) { return cmd_gradcheck(s, gc); }; });

  AblateArgs ab;
  auto* b = app.add_subcommand("ablate", "Train and compare the four systems");
  b->add_option("--systems", ab.systems, "Comma-separated subset of baseline,s1,s2,s3");
  b->add_option("--config", ab.config, "Run config JSON")->required();
  b->add_option("--out", ab.out, "Output directory")->required();
  b->add_option("--jobs", ab.jobs, "Arms trained concurrently");
  b->callback([&] { action = [&](Session& s) { return cmd_ablate(s, ab); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Session session{args, out, err, std::nullopt};
  int code = kOk;
  std::string error;
  try {
    code = action(session);
  } catch (const UsageError& e) {
    code = kUsage;
    error = e.what();
  } catch (const NumericError& e) {
    code = kNumericError;
    error = e.what();
  } catch (const std::exception& e) {
    code = kDataError;
    error = e.what();
  }
  if (!error.empty()) err << "error: " << error << '\n';
  if (session.manifest) {
    try {
      session.manifest->finish(code, error);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      if (code == kOk) code = kDataError;
    }
  }
  return code;
}

}  // namespace ppg2mel::cli
