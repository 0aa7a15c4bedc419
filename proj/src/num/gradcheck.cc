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

#include "ppg2mel/num/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppg2mel/num/rng.h"

namespace ppg2mel::num {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedTensors& inputs,
                          const GradcheckOptions& options) {
  std::vector<Tensor> handles;
  for (const auto& [name, t] : inputs) {
    Tensor h = t;
    if (!h.requires_grad()) h.set_requires_grad(true);
    h.zero_grad();
    handles.push_back(h);
  }
  Tape::active().clear();
  backward(loss_fn());

  std::vector<std::vector<double>> analytic;
  for (const auto& h : handles) analytic.emplace_back(h.grad().begin(), h.grad().end());

  GradcheckReport report;
  report.worst.rel_error = -1.0;
  NoGradGuard no_grad;
  Rng rng(options.seed);
  for (std::size_t k = 0; k < handles.size(); ++k) {
    Tensor& h = handles[k];
    std::vector<std::size_t> order(h.numel());
    std::iota(order.begin(), order.end(), 0);
    if (options.max_entries && options.max_entries < order.size()) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      order.resize(options.max_entries);
      std::sort(order.begin(), order.end());
    }
    double tensor_worst = 0.0;
    auto values = h.mutable_data();
    for (std::size_t idx : order) {
      const double saved = values[idx];
      values[idx] = saved + options.step;
      const double up = loss_fn().item();
      values[idx] = saved - options.step;
      const double down = loss_fn().item();
      values[idx] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][idx];
      const double err = relative_error(a, numeric, options.floor);
      ++report.checked;
      tensor_worst = std::max(tensor_worst, err);
      if (err > report.worst.rel_error) report.worst = {inputs[k].first, idx, a, numeric, err};
    }
    report.per_tensor.emplace_back(inputs[k].first, tensor_worst);
  }
  return report;
}

}  // namespace ppg2mel::num
