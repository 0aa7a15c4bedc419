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

#include "ppg2mel/train/ablation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <thread>

#include "ppg2mel/attention/attention.h"
#include "ppg2mel/model/model.h"
#include "ppg2mel/num/errors.h"

namespace ppg2mel::train {

using model::SystemKind;
using num::Tensor;

std::size_t AblationData::max_train_ppg() const {
  std::size_t m = 0;
  for (const auto& u : train) m = std::max(m, u.ppg_frames());
  return m;
}

std::vector<synth::Utterance> utterances_of_length(const synth::ToyLanguage& lang,
                                                   std::size_t ppg_frames, std::size_t count,
                                                   std::uint64_t seed) {
  if (ppg_frames < 1) throw ContractError("utterances_of_length: ppg_frames must be >= 1");
  // Mean duration is 6 mel frames, i.e. 2 PPG frames per phoneme.
  const std::size_t n = std::max<std::size_t>(1, (ppg_frames + 1) / 2);
  synth::LengthRange range;
  range.min_phones = n > 2 ? n - 2 : 1;
  range.max_phones = n + 2;
  std::vector<synth::Utterance> out;
  for (std::uint64_t k = 0; out.size() < count; ++k) {
    if (k > 100000 * (count + 1)) throw ContractError("utterances_of_length: no utterance of that length");
    synth::Utterance u = synth::gen_utterance(lang, num::derive_seed(seed, k, 0x1e), range);
    if (u.ppg_frames() != ppg_frames) continue;
    char id[32];
    std::snprintf(id, sizeof id, "len%zu_%05zu", ppg_frames, out.size());
    u.id = id;
    out.push_back(std::move(u));
  }
  return out;
}

model::SystemConfig system_config(SystemKind kind, const model::SystemConfig& base) {
  const model::SystemConfig p = model::preset(kind);
  model::SystemConfig c = base;
  c.name = p.name;
  c.encoder = p.encoder;
  c.attention = p.attention;
  c.use_mel_ref = p.use_mel_ref;
  c.use_phone_ref = p.use_phone_ref;
  return c;
}

LengthEval evaluate_length(const model::Model& model, const features::NormStats& stats,
                           const AblationData& data, const LengthSet& set) {
  num::NoGradGuard no_grad;
  const std::size_t r = model.config().reduction_factor;
  LengthEval ev;
  ev.multiplier = set.multiplier;
  ev.ppg_frames = set.ppg_frames;
  double total = 0.0;
  for (std::size_t i = 0; i < set.utterances.size(); ++i) {
    const synth::Utterance& u = set.utterances[i];
    const auto ref = features::normalize(
        synth::native_reference(data.lang, u, num::derive_seed(data.reference_seed, i, set.ppg_frames)), stats);
    const Tensor aug = model.encode(u.ppg, {ref.frames, u.phonemes}, {});
    model::DecodeRequest req;
    req.mode = model::DecodeMode::free_running;
    req.max_steps = (u.mel_frames() + r - 1) / r;
    req.fixed_length = true;
    const model::DecodeResult out = model.decode(aug, req, {});
    for (double v : out.mel_after.values()) {
      if (!std::isfinite(v)) {
        ev.finite = false;
        break;
      }
    }
    total += attention::alignment_error(out.alignment,
                                        attention::decoder_oracle(out.steps, r, u.ppg_frames()));
    if (i == 0) ev.example_alignment = out.alignment;
  }
  ev.alignment_error = set.utterances.empty() ? 0.0 : total / static_cast<double>(set.utterances.size());
  return ev;
}

void evaluate_arm(const model::Model& model, const features::NormStats& stats,
                  const AblationData& data, ArmResult& arm) {
  arm.train_mse = teacher_forced_mse(model, make_examples(data.train, stats));
  arm.val_mse = teacher_forced_mse(model, make_examples(data.val.empty() ? data.train : data.val, stats));
  arm.lengths.clear();
  for (const LengthSet& set : data.tests) {
    try {
      arm.lengths.push_back(evaluate_length(model, stats, data, set));
    } catch (const NumericError&) {
      LengthEval ev;
      ev.multiplier = set.multiplier;
      ev.ppg_frames = set.ppg_frames;
      ev.alignment_error = 1.0;
      ev.finite = false;
      arm.lengths.push_back(ev);
    }
  }
}

namespace {

ArmResult run_arm(SystemKind kind, const model::SystemConfig& base, const AblationData& data,
                  const features::NormStats& stats, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& config,
                  const ArmCallback& on_step) {
  ArmResult arm;
  arm.system = kind;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    arm.config = system_config(kind, base);
    model::validate(arm.config);
    model::Model m(arm.config, config.seed);
    arm.param_count = m.param_count();
    arm.group_counts = m.group_counts();
    StepCallback cb;
    if (on_step) cb = [&](const LossRecord& r) { on_step(kind, r); };
    TrainState state = train(m, train_set, val_set, config, {}, cb);
    arm.steps = state.step;
    arm.best_step = state.best_step;
    arm.curve = std::move(state.curve);
    restore(m.params(), state.best_params);
    arm.best_params = snapshot(m.params());
    evaluate_arm(m, stats, data, arm);
    arm.ok = true;
  } catch (const NumericError& e) {
    arm.error = e.what();
    arm.numeric_failure = true;
  } catch (const std::exception& e) {
    arm.error = e.what();
  }
  arm.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return arm;
}

}  // namespace

AblationReport run_ablation(const std::vector<SystemKind>& systems, const model::SystemConfig& base,
                            const AblationData& data, const TrainConfig& config, unsigned jobs,
                            const ArmCallback& on_step) {
  validate(config);
  if (systems.empty()) throw ContractError("run_ablation: no systems requested");
  if (data.train.empty()) throw ContractError("run_ablation: empty training corpus");
  std::vector<features::MelSpectrogram> mels;
  for (const auto& u : data.train) mels.push_back(u.mel);
  const features::NormStats stats = features::fit_norm(mels);
  const auto train_set = make_examples(data.train, stats);
  const auto val_set = make_examples(data.val, stats);

  AblationReport report;
  report.train_max_ppg = data.max_train_ppg();
  report.stats = stats;
  report.arms.resize(systems.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(systems.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < systems.size(); ++i) {
      report.arms[i] = run_arm(systems[i], base, data, stats, train_set, val_set, config, on_step);
    }
    return report;
  }
  // Each arm owns its model, RNGs and (thread-local) tape.
  for (std::size_t start = 0; start < systems.size(); start += workers) {
    std::vector<std::future<ArmResult>> running;
    for (std::size_t i = start; i < std::min(systems.size(), start + workers); ++i) {
      running.push_back(std::async(std::launch::async, run_arm, systems[i], std::cref(base), std::cref(data),
                                   std::cref(stats), std::cref(train_set), std::cref(val_set),
                                   std::cref(config), std::cref(on_step)));
    }
    for (std::size_t k = 0; k < running.size(); ++k) report.arms[start + k] = running[k].get();
  }
  return report;
}

std::string multiplier_label(double multiplier) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%gx", multiplier);
  return buf;
}

nlohmann::json report_json(const AblationReport& report) {
  nlohmann::json arms = nlohmann::json::array();
  for (const ArmResult& a : report.arms) {
    nlohmann::json j;
    j["system"] = model::system_name(a.system);
    j["status"] = a.ok ? "ok" : "error";
    if (!a.ok) {
      j["error"] = a.error;
    } else {
      j["param_count"] = a.param_count;
      j["group_counts"] = a.group_counts;
      j["train_mse"] = a.train_mse;
      j["val_mse"] = a.val_mse;
      nlohmann::json err, finite, frames;
      for (const LengthEval& ev : a.lengths) {
        const std::string key = multiplier_label(ev.multiplier);
        err[key] = ev.alignment_error;
        finite[key] = ev.finite;
        frames[key] = ev.ppg_frames;
      }
      j["alignment_error"] = err;
      j["finite_output"] = finite;
      j["test_ppg_frames"] = frames;
      j["steps"] = a.steps;
      j["best_step"] = a.best_step;
    }
    arms.push_back(j);
  }
  return {{"version", 1}, {"train_max_ppg_frames", report.train_max_ppg}, {"systems", arms}};
}

nlohmann::json timing_json(const AblationReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const ArmResult& a : report.arms) j[model::system_name(a.system)] = {{"wall_clock_s", a.wall_clock_s}};
  return j;
}

}  // namespace ppg2mel::train
