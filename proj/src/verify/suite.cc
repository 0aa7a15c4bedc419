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

#include "ppg2mel/verify/suite.h"

#include <cstdio>
#include <functional>
#include <map>

#include "ppg2mel/model/model.h"
#include "ppg2mel/num/gradcheck.h"
#include "ppg2mel/num/ops.h"
#include "ppg2mel/num/recurrent.h"

namespace ppg2mel::verify {

using num::NamedTensors;
using num::Rng;
using num::Shape;
using num::Tensor;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

std::string entry_name(const num::GradcheckEntry& e) {
  return e.tensor + "[" + std::to_string(e.index) + "]";
}

// sum(w * f()) against fixed random weights so every output element matters.
SuiteRow check_primitive(const std::string& name, const std::function<Tensor()>& f,
                         const NamedTensors& inputs, Rng& rng) {
  Tensor probe;
  {
    num::NoGradGuard g;
    probe = f();
  }
  Tensor w = random_tensor(probe.shape(), rng);
  num::GradcheckReport r = num::gradcheck([&] { return num::sum(num::mul(f(), w)); }, inputs);
  return {name, r.worst.rel_error, kPrimitiveTolerance, entry_name(r.worst), r.checked};
}

}  // namespace

std::vector<SuiteRow> primitive_rows(bool inject_bug) {
  using namespace num;
  Rng rng(20240601);
  std::vector<SuiteRow> rows;
  auto add_row = [&](const std::string& name, const std::function<Tensor()>& f, const NamedTensors& in) {
    rows.push_back(check_primitive(name, f, in, rng));
  };

  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
  add_row("matmul", [&] { return matmul(a, b); }, {{"a", a}, {"b", b}});
  Tensor x = random_tensor({3, 4}, rng, -2, 2), y = random_tensor({4}, rng, 0.5, 1.5);
  add_row("add", [&] { return add(x, y); }, {{"x", x}, {"y", y}});
  add_row("sub", [&] { return sub(x, y); }, {{"x", x}, {"y", y}});
  add_row("mul", [&] { return mul(x, y); }, {{"x", x}, {"y", y}});
  add_row("div", [&] { return div(x, y); }, {{"x", x}, {"y", y}});
  add_row("exp", [&] { return exp(x); }, {{"x", x}});
  add_row("tanh", [&] { return tanh(x); }, {{"x", x}});
  add_row("sigmoid", [&] { return sigmoid(x); }, {{"x", x}});
  add_row("softplus", [&] { return softplus(x); }, {{"x", x}});
  add_row("square", [&] { return square(x); }, {{"x", x}});
  add_row("neg", [&] { return neg(x); }, {{"x", x}});
  add_row("scale", [&] { return scale(x, -2.5); }, {{"x", x}});
  add_row("add_scalar", [&] { return add_scalar(x, 0.75); }, {{"x", x}});
  Tensor pos = random_tensor({2, 5}, rng, 0.2, 2.0);
  add_row("sqrt", [&] { return sqrt(pos); }, {{"x", pos}});
  add_row("log", [&] { return log(pos); }, {{"x", pos}});
  Tensor kinked = Tensor::mat({{-1.0, 0.5, 2.0}, {-0.3, 0.7, -2.2}});
  add_row("relu", [&] { return relu(kinked); }, {{"x", kinked}});
  Tensor c = random_tensor({3, 2}, rng);
  add_row("transpose", [&] { return transpose(x); }, {{"x", x}});
  add_row("reshape", [&] { return reshape(x, {2, 6}); }, {{"x", x}});
  add_row("concat", [&] { return concat({x, c}, 1); }, {{"x", x}, {"c", c}});
  add_row("slice", [&] { return slice(x, 1, 1, 2); }, {{"x", x}});
  add_row("gather_rows", [&] { return gather_rows(x, {2, 0, 2}); }, {{"x", x}});
  add_row("sum_axis", [&] { return sum_axis(x, 0); }, {{"x", x}});
  add_row("mean", [&] { return mean(x); }, {{"x", x}});
  add_row("softmax", [&] { return softmax(x, 1); }, {{"x", x}});
  add_row("dropout",
          [&] {
            Rng fixed(5);
            return dropout(x, 0.5, fixed, true);
          },
          {{"x", x}});
  Tensor seq = random_tensor({7, 3}, rng), k1 = random_tensor({4, 3, 2}, rng);
  add_row("conv1d", [&] { return conv1d(seq, k1, 1, Padding::same); }, {{"x", seq}, {"k", k1}});
  add_row("conv1d_strided", [&] { return conv1d(seq, k1, 3, Padding::valid); }, {{"x", seq}, {"k", k1}});
  Tensor img = random_tensor({5, 8, 2}, rng), k2 = random_tensor({3, 3, 2, 3}, rng);
  add_row("conv2d", [&] { return conv2d(img, k2, 3, 2); }, {{"x", img}, {"k", k2}});
  Tensor pool = Tensor::from({5, 2}, {0.1, 0.9, 0.7, -0.2, 0.3, 0.5, -0.6, 0.8, 0.4, -0.9});
  add_row("max_pool1d", [&] { return max_pool1d(pool, 2, 1); }, {{"x", pool}});

  Tensor gx = random_tensor({4}, rng), gh = random_tensor({3}, rng);
  GruParams gp{random_tensor({4, 9}, rng), random_tensor({3, 9}, rng), random_tensor({9}, rng),
               random_tensor({9}, rng)};
  add_row("gru_cell", [&] { return gru_cell(gx, gh, gp); },
          {{"x", gx}, {"h", gh}, {"w_ih", gp.w_ih}, {"w_hh", gp.w_hh}, {"b_ih", gp.b_ih}, {"b_hh", gp.b_hh}});
  Tensor lx = random_tensor({4}, rng);
  LstmState ls{random_tensor({3}, rng), random_tensor({3}, rng)};
  LstmParams lp{random_tensor({4, 12}, rng), random_tensor({3, 12}, rng), random_tensor({12}, rng)};
  add_row("lstm_cell",
          [&] {
            LstmState n = lstm_cell(lx, ls, lp);
            return concat({n.h, n.c}, 0);
          },
          {{"x", lx}, {"h", ls.h}, {"c", ls.c}, {"w_ih", lp.w_ih}, {"w_hh", lp.w_hh}, {"b", lp.b}});

  if (inject_bug) {
    // Value 1.5 x^2, but half of it bypasses the tape: the recorded
    // derivative is 2x instead of 3x.
    add_row("injected_bug",
            [&] {
              Tensor sq = square(x);
              return add(sq, scale(sq.detach(), 0.5));
            },
            {{"x", x}});
  }
  return rows;
}

std::vector<SuiteRow> end_to_end_rows(model::SystemKind kind, model::Scale scale,
                                      std::size_t entries_per_tensor) {
  model::Model m(model::preset(kind, scale), 17);
  Rng rng(18);
  // Zero biases with a zero go frame would sit exactly on ReLU kinks.
  for (auto& [name, t] : m.params()) {
    for (double& v : t.mutable_data()) v += rng.uniform(-0.05, 0.05);
  }
  struct Item {
    Tensor ppg, target;
    std::vector<std::size_t> phones;
  };
  const std::size_t ppg_dim = m.config().ppg_dim, mel_dim = m.config().mel_dim;
  std::vector<Item> batch{
      {num::softmax(random_tensor({5, ppg_dim}, rng, -2, 2), 1), random_tensor({12, mel_dim}, rng, -4, 4), {1, 5, 2}},
      {num::softmax(random_tensor({4, ppg_dim}, rng, -2, 2), 1), random_tensor({10, mel_dim}, rng, -4, 4), {3, 0, 7}}};
  const std::size_t r = m.config().reduction_factor;
  auto loss = [&] {
    Tensor total;
    for (const auto& it : batch) {
      Tensor padded = model::pad_to_multiple(it.target, r, 12);
      Tensor aug = m.encode(it.ppg, {it.target, it.phones}, {});
      model::DecodeRequest req;
      req.target = padded;
      req.valid_frames = it.target.dim(0);
      model::LossTerms l = model::conversion_loss(m.decode(aug, req, {}), padded, it.target.dim(0), r,
                                                  m.config().stop_token);
      total = total.defined() ? num::add(total, l.total) : l.total;
    }
    return num::scale(total, 1.0 / static_cast<double>(batch.size()));
  };
  num::GradcheckOptions opt;
  opt.max_entries = entries_per_tensor;
  opt.seed = 3;
  num::GradcheckReport report = num::gradcheck(loss, m.params(), opt);

  // Regroup the per-tensor worst errors by top-level parameter group.
  std::map<std::string, SuiteRow> groups;
  std::vector<std::string> order;
  for (const auto& [tensor, err] : report.per_tensor) {
    const std::string group = tensor.substr(0, tensor.find('.'));
    auto [it, fresh] = groups.try_emplace(group);
    if (fresh) {
      order.push_back(group);
      it->second.component = model::system_name(kind) + "/" + group;
      it->second.tolerance = kEndToEndTolerance;
      it->second.worst_entry = tensor;
    }
    ++it->second.checked;
    if (err > it->second.worst_rel_error) {
      it->second.worst_rel_error = err;
      it->second.worst_entry = tensor;
    }
  }
  std::vector<SuiteRow> rows;
  for (const auto& g : order) rows.push_back(groups[g]);
  return rows;
}

std::vector<SuiteRow> run_suite(const SuiteOptions& options) {
  std::vector<SuiteRow> rows = primitive_rows(options.inject_bug);
  for (model::SystemKind k : {model::SystemKind::baseline, model::SystemKind::s1, model::SystemKind::s2,
                              model::SystemKind::s3}) {
    auto more = end_to_end_rows(k, options.scale, options.entries_per_tensor);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  return rows;
}

std::string format_table(const std::vector<SuiteRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %12s %10s  %-6s %s\n", "component", "worst_rel", "tolerance",
                "result", "worst_at");
  out += line;
  for (const SuiteRow& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %12.3e %10.0e  %-6s %s\n", r.component.c_str(), r.worst_rel_error,
                  r.tolerance, r.pass() ? "PASS" : "FAIL", r.worst_entry.c_str());
    out += line;
  }
  return out;
}

}  // namespace ppg2mel::verify
