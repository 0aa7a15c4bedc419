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

// Finite-difference checks (central, h = 1e-5) for every differentiable
// primitive. Each case reduces the op output against fixed random weights so
// every output element contributes to the scalar.

#include <gtest/gtest.h>

#include <functional>

#include "ppg2mel/num/gradcheck.h"
#include "ppg2mel/num/ops.h"
#include "ppg2mel/num/recurrent.h"

namespace ppg2mel::num {
namespace {

constexpr double kPrimitiveTol = 1e-6;

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

// sum(w * f()) with w fixed and random.
std::function<Tensor()> weighted(std::function<Tensor()> f, std::uint64_t seed) {
  Tensor probe;
  {
    NoGradGuard g;
    probe = f();
  }
  Tensor w = random_tensor(probe.shape(), seed);
  return [f, w] { return sum(mul(f(), w)); };
}

void expect_gradients(const std::function<Tensor()>& f, const NamedTensors& inputs,
                      double tol = kPrimitiveTol) {
  GradcheckReport r = gradcheck(weighted(f, 99), inputs);
  EXPECT_LT(r.worst.rel_error, tol) << r.worst.tensor << "[" << r.worst.index
                                    << "] analytic=" << r.worst.analytic
                                    << " numeric=" << r.worst.numeric;
  EXPECT_GT(r.checked, 0u);
}

TEST(Gradcheck, Matmul) {
  Tensor a = random_tensor({3, 4}, 1), b = random_tensor({4, 5}, 2);
  expect_gradients([&] { return matmul(a, b); }, {{"a", a}, {"b", b}});
}

TEST(Gradcheck, SumOfMatmulMatchesFiniteDifference) {
  Tensor a = random_tensor({2, 3}, 3), b = random_tensor({3, 2}, 4);
  GradcheckReport r = gradcheck([&] { return sum(matmul(a, b)); }, {{"a", a}});
  EXPECT_LT(r.worst.rel_error, kPrimitiveTol);
}

TEST(Gradcheck, BinaryBroadcast) {
  Tensor x = random_tensor({3, 4}, 5), y = random_tensor({4}, 6, 0.5, 1.5);
  expect_gradients([&] { return add(x, y); }, {{"x", x}, {"y", y}});
  expect_gradients([&] { return sub(x, y); }, {{"x", x}, {"y", y}});
  expect_gradients([&] { return mul(x, y); }, {{"x", x}, {"y", y}});
  expect_gradients([&] { return div(x, y); }, {{"x", x}, {"y", y}});
  Tensor col = random_tensor({3, 1}, 7);
  expect_gradients([&] { return mul(x, col); }, {{"x", x}, {"col", col}});
}

TEST(Gradcheck, Unary) {
  Tensor x = random_tensor({2, 5}, 8, -2.0, 2.0);
  Tensor pos = random_tensor({2, 5}, 9, 0.2, 2.0);
  expect_gradients([&] { return exp(x); }, {{"x", x}});
  expect_gradients([&] { return tanh(x); }, {{"x", x}});
  expect_gradients([&] { return sigmoid(x); }, {{"x", x}});
  expect_gradients([&] { return neg(x); }, {{"x", x}});
  expect_gradients([&] { return square(x); }, {{"x", x}});
  expect_gradients([&] { return softplus(x); }, {{"x", x}});
  expect_gradients([&] { return scale(x, -2.5); }, {{"x", x}});
  expect_gradients([&] { return add_scalar(x, 3.0); }, {{"x", x}});
  expect_gradients([&] { return sqrt(pos); }, {{"pos", pos}});
  expect_gradients([&] { return log(pos); }, {{"pos", pos}});
}

TEST(Gradcheck, ReluAwayFromKink) {
  // Values bounded away from 0 so the difference stencil never straddles it.
  Tensor x = Tensor::mat({{-1.0, 0.5, 2.0}, {-0.3, 0.7, -2.2}});
  expect_gradients([&] { return relu(x); }, {{"x", x}});
}

TEST(Gradcheck, LayoutOps) {
  Tensor x = random_tensor({3, 4}, 10), y = random_tensor({3, 2}, 11);
  expect_gradients([&] { return transpose(x); }, {{"x", x}});
  expect_gradients([&] { return reshape(x, {2, 6}); }, {{"x", x}});
  expect_gradients([&] { return concat({x, y}, 1); }, {{"x", x}, {"y", y}});
  expect_gradients([&] { return slice(x, 1, 1, 2); }, {{"x", x}});
  expect_gradients([&] { return gather_rows(x, {2, 0, 2}); }, {{"x", x}});
  expect_gradients([&] { return sum_axis(x, 0); }, {{"x", x}});
  expect_gradients([&] { return mean(x); }, {{"x", x}});
}

TEST(Gradcheck, Softmax) {
  Tensor x = random_tensor({3, 4}, 12, -2.0, 2.0);
  expect_gradients([&] { return softmax(x, 1); }, {{"x", x}});
  expect_gradients([&] { return softmax(x, 0); }, {{"x", x}});
}

TEST(Gradcheck, Dropout) {
  Tensor x = random_tensor({4, 4}, 13);
  expect_gradients(
      [&] {
        Rng rng(5);
        return dropout(x, 0.5, rng, true);
      },
      {{"x", x}});
}

TEST(Gradcheck, Conv1d) {
  Tensor x = random_tensor({7, 3}, 14), k = random_tensor({4, 3, 2}, 15);
  expect_gradients([&] { return conv1d(x, k, 1, Padding::same); }, {{"x", x}, {"k", k}});
  expect_gradients([&] { return conv1d(x, k, 2, Padding::same); }, {{"x", x}, {"k", k}});
  expect_gradients([&] { return conv1d(x, k, 3, Padding::valid); }, {{"x", x}, {"k", k}});
}

TEST(Gradcheck, Conv2d) {
  Tensor x = random_tensor({5, 8, 2}, 16), k = random_tensor({3, 3, 2, 3}, 17);
  expect_gradients([&] { return conv2d(x, k, 1, 2); }, {{"x", x}, {"k", k}});
  expect_gradients([&] { return conv2d(x, k, 3, 2); }, {{"x", x}, {"k", k}});
}

TEST(Gradcheck, MaxPool) {
  // Distinct values: ties are kinks.
  Tensor x = Tensor::from({5, 2}, {0.1, 0.9, 0.7, -0.2, 0.3, 0.5, -0.6, 0.8, 0.4, -0.9});
  expect_gradients([&] { return max_pool1d(x, 2, 1); }, {{"x", x}});
}

TEST(Gradcheck, GruCell) {
  Tensor x = random_tensor({4}, 18), h = random_tensor({3}, 19);
  GruParams p{random_tensor({4, 9}, 20), random_tensor({3, 9}, 21), random_tensor({9}, 22),
              random_tensor({9}, 23)};
  expect_gradients([&] { return gru_cell(x, h, p); },
                   {{"x", x}, {"h", h}, {"w_ih", p.w_ih}, {"w_hh", p.w_hh},
                    {"b_ih", p.b_ih}, {"b_hh", p.b_hh}});
}

TEST(Gradcheck, LstmCell) {
  Tensor x = random_tensor({2, 4}, 24);
  LstmState s{random_tensor({2, 3}, 25), random_tensor({2, 3}, 26)};
  LstmParams p{random_tensor({4, 12}, 27), random_tensor({3, 12}, 28), random_tensor({12}, 29)};
  auto both = [&] {
    LstmState n = lstm_cell(x, s, p);
    return concat({n.h, n.c}, 1);
  };
  expect_gradients(both, {{"x", x}, {"h", s.h}, {"c", s.c}, {"w_ih", p.w_ih},
                          {"w_hh", p.w_hh}, {"b", p.b}});
}

TEST(Gradcheck, DetectsAWrongBackward) {
  // A deliberately wrong derivative must be flagged by the harness.
  Tensor x = random_tensor({3}, 30);
  auto wrong = [&] {
    Tensor y = square(x);
    // scale the value but not the recorded gradient path: f = 1.5 * x^2 as
    // seen by finite differences, but the tape only sees x^2 for part of it
    Tensor frozen = y.detach();
    return sum(add(y, scale(frozen, 0.5)));
  };
  GradcheckReport r = gradcheck(wrong, {{"x", x}});
  EXPECT_GT(r.worst.rel_error, 1e-2);
}

}  // namespace
}  // namespace ppg2mel::num
