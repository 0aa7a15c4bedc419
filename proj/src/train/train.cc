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

#include "ppg2mel/train/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ppg2mel/model/checkpoint.h"
#include "ppg2mel/model/json_reader.h"
#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/ops.h"

namespace ppg2mel::train {

namespace fs = std::filesystem;
using nlohmann::json;
using num::Tensor;

double TrainConfig::lr_at(std::size_t step) const {
  if (schedule == LrSchedule::constant) return lr;
  return lr * std::pow(decay_rate, static_cast<double>(step) / static_cast<double>(decay_steps));
}

namespace {
std::vector<std::string> range_errors(const TrainConfig& c, const std::string& prefix) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) errors.push_back(prefix + msg);
  };
  check(c.lr > 0.0, "lr: must be > 0");
  check(c.batch_size >= 1, "batch_size: must be >= 1");
  check(c.grad_clip_norm > 0.0, "grad_clip_norm: must be > 0");
  check(c.val_every >= 1, "val_every: must be >= 1");
  check(c.val_fraction >= 0.0 && c.val_fraction < 1.0, "val_fraction: must be in [0, 1)");
  if (c.schedule == LrSchedule::exponential) {
    check(c.decay_rate > 0.0, "decay_rate: must be > 0");
    check(c.decay_steps >= 1, "decay_steps: must be >= 1");
  }
  return errors;
}

[[noreturn]] void throw_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid training config:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}
}  // namespace

void validate(const TrainConfig& c) {
  const auto errors = range_errors(c, "");
  if (!errors.empty()) throw_errors(errors);
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"seed", c.seed},
          {"grad_clip_norm", c.grad_clip_norm},
          {"val_every", c.val_every},
          {"val_fraction", c.val_fraction},
          {"schedule", c.schedule == LrSchedule::constant ? "constant" : "exponential"},
          {"decay_rate", c.decay_rate},
          {"decay_steps", c.decay_steps}};
}

TrainConfig train_config_from_json(const json& j) {
  std::vector<std::string> errors;
  TrainConfig c;
  model::JsonReader r(j, "train.", errors);
  r.field("lr", c.lr);
  r.field("batch_size", c.batch_size);
  r.field("max_steps", c.max_steps);
  r.field("seed", c.seed);
  r.field("grad_clip_norm", c.grad_clip_norm);
  r.field("val_every", c.val_every);
  r.field("val_fraction", c.val_fraction);
  r.choice("schedule", c.schedule,
           {{"constant", LrSchedule::constant}, {"exponential", LrSchedule::exponential}});
  r.field("decay_rate", c.decay_rate);
  r.field("decay_steps", c.decay_steps);
  r.reject_unknown();
  for (auto& e : range_errors(c, "train.")) errors.push_back(std::move(e));
  if (!errors.empty()) throw_errors(errors);
  return c;
}

Example make_example(const synth::Utterance& utt, const features::NormStats& stats) {
  Example ex;
  ex.id = utt.id;
  ex.ppg = utt.ppg;
  ex.mel = features::normalize(utt.mel, stats).frames;
  ex.ref_mel = ex.mel;
  ex.phones = utt.phonemes;
  return ex;
}

std::vector<Example> make_examples(const std::vector<synth::Utterance>& corpus,
                                   const features::NormStats& stats) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) out.push_back(make_example(u, stats));
  return out;
}

model::LossTerms batch_loss(const model::Model& model, const std::vector<const Example*>& batch,
                            std::uint64_t dropout_seed) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  const std::size_t r = model.config().reduction_factor;
  std::size_t frames = 0;
  for (const Example* ex : batch) frames = std::max(frames, ex->mel.dim(0));

  model::LossTerms sum;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Example& ex = *batch[k];
    num::Rng rng(num::derive_seed(dropout_seed, k));
    model::RunContext ctx{true, &rng};
    const Tensor target = model::pad_to_multiple(ex.mel, r, frames);
    model::DecodeRequest req;
    req.target = target;
    req.valid_frames = ex.mel.dim(0);
    const Tensor aug = model.encode(ex.ppg, {ex.ref_mel, ex.phones}, ctx);
    model::LossTerms l = model::conversion_loss(model.decode(aug, req, ctx), target, ex.mel.dim(0), r,
                                                model.config().stop_token);
    sum.total = sum.total.defined() ? num::add(sum.total, l.total) : l.total;
    sum.mse_before += l.mse_before;
    sum.mse_after += l.mse_after;
    sum.bce += l.bce;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  sum.total = num::scale(sum.total, inv);
  sum.mse_before *= inv;
  sum.mse_after *= inv;
  sum.bce *= inv;
  return sum;
}

double teacher_forced_mse(const model::Model& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw ContractError("teacher_forced_mse: no examples");
  num::NoGradGuard no_grad;
  const std::size_t r = model.config().reduction_factor;
  double total = 0.0;
  for (const Example& ex : examples) {
    const Tensor target = model::pad_to_multiple(ex.mel, r);
    model::DecodeRequest req;
    req.target = target;
    req.valid_frames = ex.mel.dim(0);
    const Tensor aug = model.encode(ex.ppg, {ex.ref_mel, ex.phones}, {});
    total += model::conversion_loss(model.decode(aug, req, {}), target, ex.mel.dim(0), r,
                                    model.config().stop_token)
                 .mse_after;
  }
  return total / static_cast<double>(examples.size());
}

num::NamedTensors snapshot(const num::NamedTensors& params) {
  num::NamedTensors out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.emplace_back(name, Tensor::from(t.shape(), t.values()));
  return out;
}

void restore(num::NamedTensors& params, const num::NamedTensors& values) {
  if (values.size() != params.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].second.numel() != params[i].second.numel()) {
      throw DimensionError("restore: size mismatch for " + params[i].first);
    }
    std::copy(values[i].second.values().begin(), values[i].second.values().end(),
              params[i].second.mutable_data().begin());
  }
}

namespace {

// Utterance indices of training step `step` (0-based). Each epoch is a fresh
// seeded permutation cut into ceil(N / B) batches; the last may be short.
std::vector<std::size_t> batch_indices(std::size_t n, const TrainConfig& c, std::size_t step,
                                       std::size_t* epoch_out, std::size_t* index_out) {
  const std::size_t per_epoch = (n + c.batch_size - 1) / c.batch_size;
  const std::size_t epoch = step / per_epoch;
  const std::size_t index = step % per_epoch;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  num::Rng rng(num::derive_seed(c.seed, epoch, 0x5b));
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const std::size_t lo = index * c.batch_size;
  const std::size_t hi = std::min(n, lo + c.batch_size);
  *epoch_out = epoch;
  *index_out = index;
  return {perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi)};
}

}  // namespace

TrainState train(model::Model& model, const std::vector<Example>& data,
                 const std::vector<Example>& val, const TrainConfig& config, TrainState state,
                 const StepCallback& on_step) {
  validate(config);
  if (data.empty()) throw ContractError("train: empty corpus");
  const std::vector<Example>& val_set = val.empty() ? data : val;
  auto& params = model.params();

  if (state.best_params.empty()) {
    state.best_val = teacher_forced_mse(model, val_set);
    state.best_step = state.step;
    state.best_params = snapshot(params);
  }

  AdamConfig adam;
  for (std::size_t s = state.step; s < config.max_steps; ++s) {
    std::size_t epoch = 0, index = 0;
    const auto ids = batch_indices(data.size(), config, s, &epoch, &index);
    std::vector<const Example*> batch;
    for (std::size_t i : ids) batch.push_back(&data[i]);

    auto fail = [&](const std::string& what) {
      num::Tape::active().clear();
      std::string utts;
      for (const Example* ex : batch) utts += (utts.empty() ? "" : ",") + ex->id;
      return NumericError(what + " in batch " + std::to_string(epoch) + ":" + std::to_string(index) +
                              " [" + utts + "]",
                          s + 1);
    };
    for (auto& [name, t] : params) t.zero_grad();
    model::LossTerms loss;
    try {
      loss = batch_loss(model, batch, num::derive_seed(config.seed, s, 0xd0));
    } catch (const NumericError& e) {
      throw fail(std::string("training forward pass: ") + e.what());
    }
    if (!std::isfinite(loss.total.item())) throw fail("non-finite training loss");
    num::backward(loss.total);

    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (const auto& [name, t] : params) grads.emplace_back(t.grad().begin(), t.grad().end());
    clip_global_norm(grads, config.grad_clip_norm);
    adam.lr = config.lr_at(s);
    adam_step(params, grads, state.adam, adam);

    LossRecord rec;
    rec.step = s + 1;
    rec.train_mse = loss.mse_after;
    if (rec.step % config.val_every == 0 || rec.step == config.max_steps) {
      rec.val_mse = teacher_forced_mse(model, val_set);
      if (rec.val_mse < state.best_val) {
        state.best_val = rec.val_mse;
        state.best_step = rec.step;
        state.best_params = snapshot(params);
      }
    }
    state.curve.push_back(rec);
    state.step = rec.step;
    if (on_step) on_step(rec);
  }
  return state;
}

TrainState finetune(model::Model& model, const fs::path& checkpoint, const std::vector<Example>& data,
                    const std::vector<Example>& val, const TrainConfig& config,
                    const StepCallback& on_step) {
  model::load_into(model, checkpoint);
  return train(model, data, val, config, TrainState{}, on_step);
}

// ---- persistence ----

namespace {

Tensor scalars(const std::vector<double>& v) { return Tensor::from({v.size()}, v); }

}  // namespace

void save_train_state(const fs::path& path, const model::Model& model, const TrainState& state) {
  num::NamedTensors bundle;
  const bool has_adam = !state.adam.m.empty();
  bundle.emplace_back("meta", scalars({static_cast<double>(state.step),
                                       static_cast<double>(state.adam.step), state.best_val,
                                       static_cast<double>(state.best_step), has_adam ? 1.0 : 0.0}));
  std::vector<double> curve{static_cast<double>(state.curve.size())};
  for (const auto& r : state.curve) {
    curve.push_back(static_cast<double>(r.step));
    curve.push_back(r.train_mse);
    curve.push_back(r.val_mse);
  }
  bundle.emplace_back("curve", scalars(curve));
  const auto& params = model.params();
  for (const auto& [name, t] : params) bundle.emplace_back("param/" + name, t);
  for (std::size_t i = 0; i < state.best_params.size(); ++i) {
    bundle.emplace_back("best/" + state.best_params[i].first, state.best_params[i].second);
  }
  if (has_adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      bundle.emplace_back("adam.m/" + params[i].first, Tensor::from(params[i].second.shape(), state.adam.m[i]));
      bundle.emplace_back("adam.v/" + params[i].first, Tensor::from(params[i].second.shape(), state.adam.v[i]));
    }
  }
  num::save_checkpoint(path, bundle);
  model::save_config(model::config_path_for(path).string(), model.config());
}

TrainState load_train_state(const fs::path& path, model::Model& model) {
  model::SystemConfig stored;
  try {
    stored = model::load_config(model::config_path_for(path).string());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("training state config: ") + e.what());
  }
  if (!model::config_diff(stored, model.config()).empty()) {
    throw LoadError("training state " + path.string() + " was written for a different config");
  }
  num::NamedTensors bundle;
  try {
    bundle = num::load_checkpoint(path);
  } catch (const FormatError& e) {
    throw LoadError("training state " + path.string() + ": " + e.what());
  }
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : bundle) by_name[name] = &t;
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("training state " + path.string() + " lacks " + name);
    return *it->second;
  };

  const auto& meta = get("meta").values();
  if (meta.size() != 5) throw LoadError("training state: malformed meta record");
  TrainState state;
  state.step = static_cast<std::size_t>(meta[0]);
  state.adam.step = static_cast<std::size_t>(meta[1]);
  state.best_val = meta[2];
  state.best_step = static_cast<std::size_t>(meta[3]);
  const bool has_adam = meta[4] != 0.0;

  const auto& curve = get("curve").values();
  const std::size_t n = curve.empty() ? 0 : static_cast<std::size_t>(curve[0]);
  if (curve.size() != 1 + 3 * n) throw LoadError("training state: malformed loss curve");
  for (std::size_t i = 0; i < n; ++i) {
    state.curve.push_back({static_cast<std::size_t>(curve[1 + 3 * i]), curve[2 + 3 * i], curve[3 + 3 * i]});
  }

  auto& params = model.params();
  for (auto& [name, t] : params) {
    const Tensor& src = get("param/" + name);
    if (src.shape() != t.shape()) throw LoadError("training state: shape mismatch for " + name);
    std::copy(src.values().begin(), src.values().end(), t.mutable_data().begin());
    if (by_name.count("best/" + name)) {
      state.best_params.emplace_back(name, get("best/" + name).clone());
    }
    if (has_adam) {
      state.adam.m.push_back(get("adam.m/" + name).values());
      state.adam.v.push_back(get("adam.v/" + name).values());
    }
  }
  if (!state.best_params.empty() && state.best_params.size() != params.size()) {
    throw LoadError("training state: incomplete best-parameter snapshot");
  }
  return state;
}

void write_loss_csv(const fs::path& path, const std::vector<LossRecord>& curve) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "step,train_mse,val_mse\n";
  char buf[64];
  for (const auto& r : curve) {
    os << r.step << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.train_mse);
    os << buf << ',';
    if (!std::isnan(r.val_mse)) {
      std::snprintf(buf, sizeof buf, "%.17g", r.val_mse);
      os << buf;
    }
    os << '\n';
  }
}

fs::path stats_path_for(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".stats.tnsr";
  return p;
}

}  // namespace ppg2mel::train
