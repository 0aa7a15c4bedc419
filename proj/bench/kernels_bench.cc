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

// Serial reference vs OpenMP kernels at the layer sizes the model uses.
//   ./build/bench/kernels_bench --benchmark_filter=Conv1d

#include <benchmark/benchmark.h>

#include <vector>

#include "ppg2mel/num/kernels.h"
#include "ppg2mel/num/rng.h"

namespace {

using namespace ppg2mel::num;

std::vector<double> random_vec(std::size_t n) {
  Rng rng(n);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const std::size_t m = state.range(0), k = state.range(1), n = state.range(2);
  auto a = random_vec(m * k), b = random_vec(k * n);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::matmul(a, b, c, m, k, n);
    } else {
      kernels::serial::matmul(a, b, c, m, k, n);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * m * k * n);
}

// Postnet-sized (T x 512 by 512-channel, width 5) and bank-sized convolutions.
template <bool Parallel>
void BM_Conv1d(benchmark::State& state) {
  kernels::Conv1dGeom g{};
  g.in_len = state.range(0);
  g.in_ch = state.range(1);
  g.out_ch = state.range(1);
  g.width = state.range(2);
  g.stride = 1;
  auto plan = kernels::same_padding(g.in_len, g.width, 1);
  g.out_len = plan.out;
  g.pad_left = plan.before;
  auto x = random_vec(g.in_len * g.in_ch), w = random_vec(g.width * g.in_ch * g.out_ch);
  std::vector<double> y(g.out_len * g.out_ch);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::conv1d(x, w, y, g);
    } else {
      kernels::serial::conv1d(x, w, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * g.out_len * g.width * g.in_ch * g.out_ch);
}

template <bool Parallel>
void BM_Conv2d(benchmark::State& state) {
  kernels::Conv2dGeom g{};
  g.in_h = state.range(0);
  g.in_w = 80;
  g.in_ch = state.range(1);
  g.out_ch = state.range(1);
  g.kh = g.kw = 3;
  g.sh = 1;
  g.sw = 2;
  auto ph = kernels::same_padding(g.in_h, 3, 1), pw = kernels::same_padding(g.in_w, 3, 2);
  g.out_h = ph.out;
  g.out_w = pw.out;
  g.pad_top = ph.before;
  g.pad_left = pw.before;
  auto x = random_vec(g.in_h * g.in_w * g.in_ch), w = random_vec(9 * g.in_ch * g.out_ch);
  std::vector<double> y(g.out_h * g.out_w * g.out_ch);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::conv2d(x, w, y, g);
    } else {
      kernels::serial::conv2d(x, w, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK(BM_Matmul<false>)->Args({1, 556, 1200})->Args({64, 256, 256})->Args({200, 512, 512});
BENCHMARK(BM_Matmul<true>)->Args({1, 556, 1200})->Args({64, 256, 256})->Args({200, 512, 512});
BENCHMARK(BM_Conv1d<false>)->Args({100, 128, 16})->Args({200, 512, 5});
BENCHMARK(BM_Conv1d<true>)->Args({100, 128, 16})->Args({200, 512, 5});
BENCHMARK(BM_Conv2d<false>)->Args({100, 32});
BENCHMARK(BM_Conv2d<true>)->Args({100, 32});

}  // namespace

BENCHMARK_MAIN();
