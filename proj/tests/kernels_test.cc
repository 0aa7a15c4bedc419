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

// The parallel kernels against the serial reference loops, plus thread-count
// invariance of the parallel results.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ppg2mel/num/kernels.h"
#include "ppg2mel/num/rng.h"

namespace ppg2mel::num::kernels {
namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(a[i]))) << "at " << i;
  }
}

class KernelShapes : public ::testing::TestWithParam<int> {};

TEST_P(KernelShapes, MatmulAndGradsMatchSerial) {
  Rng rng(GetParam());
  const std::size_t m = rng.uniform_int(1, 70), k = rng.uniform_int(1, 90),
                    n = rng.uniform_int(1, 80);
  auto a = random_vec(m * k, 1 + GetParam()), b = random_vec(k * n, 2 + GetParam()),
       dc = random_vec(m * n, 3 + GetParam());
  std::vector<double> c1(m * n), c2(m * n);
  serial::matmul(a, b, c1, m, k, n);
  parallel::matmul(a, b, c2, m, k, n);
  expect_close(c1, c2);

  std::vector<double> da1(m * k, 0.5), da2(m * k, 0.5);
  serial::matmul_grad_a(dc, b, da1, m, k, n);
  parallel::matmul_grad_a(dc, b, da2, m, k, n);
  expect_close(da1, da2);

  std::vector<double> db1(k * n, -0.25), db2(k * n, -0.25);
  serial::matmul_grad_b(a, dc, db1, m, k, n);
  parallel::matmul_grad_b(a, dc, db2, m, k, n);
  expect_close(db1, db2);
}

TEST_P(KernelShapes, Conv1dMatchesSerial) {
  Rng rng(100 + GetParam());
  Conv1dGeom g{};
  g.in_len = rng.uniform_int(1, 60);
  g.in_ch = rng.uniform_int(1, 20);
  g.out_ch = rng.uniform_int(1, 20);
  g.width = rng.uniform_int(1, 16);
  g.stride = rng.uniform_int(1, 3);
  auto plan = same_padding(g.in_len, g.width, g.stride);
  g.out_len = plan.out;
  g.pad_left = plan.before;
  auto x = random_vec(g.in_len * g.in_ch, 7), w = random_vec(g.width * g.in_ch * g.out_ch, 8),
       dy = random_vec(g.out_len * g.out_ch, 9);
  std::vector<double> y1(g.out_len * g.out_ch), y2(y1.size());
  serial::conv1d(x, w, y1, g);
  parallel::conv1d(x, w, y2, g);
  expect_close(y1, y2);

  std::vector<double> dx1(x.size()), dx2(x.size());
  serial::conv1d_grad_input(dy, w, dx1, g);
  parallel::conv1d_grad_input(dy, w, dx2, g);
  expect_close(dx1, dx2);

  std::vector<double> dw1(w.size()), dw2(w.size());
  serial::conv1d_grad_kernel(x, dy, dw1, g);
  parallel::conv1d_grad_kernel(x, dy, dw2, g);
  expect_close(dw1, dw2);
}

TEST_P(KernelShapes, Conv2dMatchesSerial) {
  Rng rng(200 + GetParam());
  Conv2dGeom g{};
  g.in_h = rng.uniform_int(1, 20);
  g.in_w = rng.uniform_int(1, 40);
  g.in_ch = rng.uniform_int(1, 6);
  g.out_ch = rng.uniform_int(1, 6);
  g.kh = rng.uniform_int(1, 4);
  g.kw = rng.uniform_int(1, 4);
  g.sh = rng.uniform_int(1, 3);
  g.sw = rng.uniform_int(1, 3);
  auto ph = same_padding(g.in_h, g.kh, g.sh), pw = same_padding(g.in_w, g.kw, g.sw);
  g.out_h = ph.out;
  g.out_w = pw.out;
  g.pad_top = ph.before;
  g.pad_left = pw.before;
  auto x = random_vec(g.in_h * g.in_w * g.in_ch, 10),
       w = random_vec(g.kh * g.kw * g.in_ch * g.out_ch, 11),
       dy = random_vec(g.out_h * g.out_w * g.out_ch, 12);
  std::vector<double> y1(dy.size()), y2(dy.size());
  serial::conv2d(x, w, y1, g);
  parallel::conv2d(x, w, y2, g);
  expect_close(y1, y2);

  std::vector<double> dx1(x.size()), dx2(x.size());
  serial::conv2d_grad_input(dy, w, dx1, g);
  parallel::conv2d_grad_input(dy, w, dx2, g);
  expect_close(dx1, dx2);

  std::vector<double> dw1(w.size()), dw2(w.size());
  serial::conv2d_grad_kernel(x, dy, dw1, g);
  parallel::conv2d_grad_kernel(x, dy, dw2, g);
  expect_close(dw1, dw2);
}

INSTANTIATE_TEST_SUITE_P(Random, KernelShapes, ::testing::Range(0, 25));

TEST(Kernels, ParallelResultIndependentOfThreadCount) {
  const std::size_t m = 128, k = 96, n = 64;
  auto a = random_vec(m * k, 21), b = random_vec(k * n, 22);
  const int saved = max_threads();
  set_threads(1);
  std::vector<double> one(m * n);
  parallel::matmul(a, b, one, m, k, n);
  set_threads(4);
  std::vector<double> four(m * n);
  parallel::matmul(a, b, four, m, k, n);
  set_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(Kernels, SamePaddingPlan) {
  EXPECT_EQ(same_padding(80, 3, 2).out, 40u);
  EXPECT_EQ(same_padding(10, 3, 3).out, 4u);
  EXPECT_EQ(same_padding(3, 3, 1).before, 1u);
  EXPECT_EQ(same_padding(3, 2, 1).before, 0u);
}

}  // namespace
}  // namespace ppg2mel::num::kernels
