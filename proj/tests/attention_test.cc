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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ppg2mel/attention/attention.h"
#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/gradcheck.h"
#include "ppg2mel/num/ops.h"
#include "oracles.h"

namespace ppg2mel::attention {
namespace {

using num::Rng;
using num::Shape;
using num::Tensor;

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

GmmParams zero_gmm(std::size_t ds, std::size_t h, std::size_t k) {
  return {Tensor::zeros({ds, h}), Tensor::zeros({h}), Tensor::zeros({h, 3 * k})};
}

TEST(Gmm, SingleComponentAtIntegers) {
  GmmState st = gmm_init_state(1);
  st.mu = Tensor::mat({{1.0}});  // delta = exp(0) = 1 moves it to 2
  GmmStep out = gmm_step(Tensor::vec({0.3, -0.2}), st, 5, zero_gmm(2, 3, 1));
  const std::vector<double> expected{std::exp(-4.0), std::exp(-1.0), 1.0, std::exp(-1.0),
                                     std::exp(-4.0)};
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(out.alpha.values()[j], expected[j], 1e-15);
  EXPECT_NEAR(out.state.sigma.values()[0] * out.state.sigma.values()[0], 0.5, 1e-15);
}

TEST(Gmm, ZeroIncrementLogitMovesOnePosition) {
  GmmState st = gmm_init_state(4);
  for (double m : st.mu.values()) EXPECT_EQ(m, 0.0);
  GmmStep out = gmm_step(Tensor::vec({1, 2}), st, 6, zero_gmm(2, 3, 4));
  for (double m : out.state.mu.values()) EXPECT_EQ(m, 1.0);
  out = gmm_step(Tensor::vec({1, 2}), out.state, 6, zero_gmm(2, 3, 4));
  for (double m : out.state.mu.values()) EXPECT_EQ(m, 2.0);
}

TEST(Gmm, InitStatesAreIndependent) {
  GmmState a = gmm_init_state(3), b = gmm_init_state(3);
  a.mu.mutable_data()[0] = 5.0;
  EXPECT_EQ(b.mu.values()[0], 0.0);
}

TEST(Gmm, MatchesTermwiseOracle) {
  Rng rng(77);
  num::NoGradGuard no_grad;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t ds = 6, h = 5, k = 1 + trial % 4, enc_len = 1 + trial % 23;
    GmmParams p{random_tensor({ds, h}, rng), random_tensor({h}, rng),
                random_tensor({h, 3 * k}, rng)};
    Tensor s = random_tensor({ds}, rng, -2, 2);
    GmmState st = gmm_init_state(k);
    st.mu = random_tensor({1, k}, rng, 0, 10);
    const SigmaForm form = trial % 5 == 0 ? SigmaForm::draft : SigmaForm::revised;
    GmmStep out = gmm_step(s, st, enc_len, p, form);
    auto expected = oracles::gmm_alpha(s.values(), st.mu.values(), p, enc_len, form);
    for (std::size_t j = 0; j < enc_len; ++j) {
      ASSERT_LT(std::abs(out.alpha.values()[j] - expected[j]), 1e-12) << "trial " << trial;
    }
  }
}

TEST(Gmm, MeansNeverMoveBackward) {
  Rng rng(5);
  num::NoGradGuard no_grad;
  for (int traj = 0; traj < 1000; ++traj) {
    GmmParams p = make_gmm_params(4, 6, 3, rng);
    for (double& v : p.v.mutable_data()) v *= 3.0;
    GmmState st = gmm_init_state(3);
    for (int step = 0; step < 200; ++step) {
      GmmStep out = gmm_step(random_tensor({4}, rng, -3, 3), st, 8, p);
      for (std::size_t m = 0; m < 3; ++m) {
        ASSERT_GE(out.state.mu.values()[m], st.mu.values()[m]);
      }
      st = out.state;
    }
  }
}

TEST(Gmm, WeightsPositiveAndUnnormalized) {
  Rng rng(6);
  GmmParams p = make_gmm_params(4, 6, 3, rng);
  GmmStep out = gmm_step(random_tensor({4}, rng), gmm_init_state(3), 5, p);
  double total = 0.0;
  for (double a : out.alpha.values()) {
    EXPECT_GT(a, 0.0);
    total += a;
  }
  EXPECT_GT(std::abs(total - 1.0), 1e-6);
}

TEST(Gmm, NonFiniteStateIsNumericError) {
  GmmState st = gmm_init_state(2);
  st.mu.mutable_data()[1] = std::nan("");
  try {
    gmm_step(Tensor::vec({0, 0}), st, 4, zero_gmm(2, 2, 2), SigmaForm::revised, 17);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.step(), 17u);
  }
}

TEST(Gmm, GradientsMatchFiniteDifferences) {
  Rng rng(8);
  GmmParams p = make_gmm_params(5, 4, 2, rng);
  p.b = random_tensor({4}, rng).set_requires_grad(true);
  Tensor s = random_tensor({5}, rng).set_requires_grad(true);
  Tensor mu0 = Tensor::mat({{0.5, 1.5}}).set_requires_grad(true);
  Tensor weights = random_tensor({7}, rng);
  auto loss = [&] {
    GmmState st = gmm_init_state(2);
    st.mu = mu0;
    GmmStep a = gmm_step(s, st, 7, p);
    GmmStep b = gmm_step(s, a.state, 7, p);
    return num::sum(num::mul(num::add(a.alpha, b.alpha), weights));
  };
  auto report = num::gradcheck(loss, {{"s", s}, {"w", p.w}, {"b", p.b}, {"v", p.v}, {"mu0", mu0}});
  EXPECT_LT(report.worst.rel_error, 1e-5) << report.worst.tensor << "[" << report.worst.index << "]";
}

TEST(Lsa, WindowIndexArithmetic) {
  EXPECT_EQ(lsa_window(30, 1.0 / 3.0, 100, 20), (std::pair<std::size_t, std::size_t>{0, 20}));
  EXPECT_EQ(lsa_window(90, 1.0 / 3.0, 100, 20), (std::pair<std::size_t, std::size_t>{20, 40}));
  EXPECT_EQ(lsa_window(0, 0.5, 10, 20), (std::pair<std::size_t, std::size_t>{0, 10}));
  EXPECT_EQ(lsa_window(1000, 1.0, 50, 20), (std::pair<std::size_t, std::size_t>{39, 50}));
}

// Plain location-sensitive attention over the whole sequence, in doubles.
std::vector<double> oracle_plain_lsa(const Tensor& s, const Tensor& memory, const Tensor& prev,
                                     const Tensor& cum, const LsaParams& p) {
  const std::size_t t_len = memory.dim(0), de = memory.dim(1), a = p.query_w.dim(1);
  const std::size_t ds = p.query_w.dim(0), width = p.loc_conv.dim(0), f = p.loc_conv.dim(2);
  const long pad = static_cast<long>((width - 1) / 2);
  std::vector<double> e(t_len);
  for (std::size_t j = 0; j < t_len; ++j) {
    std::vector<double> loc(f, 0.0);
    for (std::size_t c = 0; c < f; ++c) {
      for (std::size_t tap = 0; tap < width; ++tap) {
        const long src = static_cast<long>(j + tap) - pad;
        if (src < 0 || src >= static_cast<long>(t_len)) continue;
        loc[c] += prev.values()[src] * p.loc_conv.values()[(tap * 2 + 0) * f + c] +
                  cum.values()[src] * p.loc_conv.values()[(tap * 2 + 1) * f + c];
      }
    }
    double score = 0.0;
    for (std::size_t u = 0; u < a; ++u) {
      double z = p.bias.values()[u];
      for (std::size_t r = 0; r < ds; ++r) z += s.values()[r] * p.query_w.values()[r * a + u];
      for (std::size_t r = 0; r < de; ++r) z += memory.values()[j * de + r] * p.memory_w.values()[r * a + u];
      for (std::size_t c = 0; c < f; ++c) z += loc[c] * p.loc_w.values()[c * a + u];
      score += p.v.values()[u] * std::tanh(z);
    }
    e[j] = score;
  }
  const double mx = *std::max_element(e.begin(), e.end());
  double z = 0.0;
  for (double& v : e) z += (v = std::exp(v - mx));
  for (double& v : e) v /= z;
  return e;
}

TEST(Lsa, WideWindowIsPlainLsa) {
  Rng rng(9);
  LsaParams p = make_lsa_params(6, 5, 8, 4, 31, 20, rng);
  Tensor memory = random_tensor({10, 5}, rng);
  Tensor s = random_tensor({6}, rng);
  Tensor prev = num::softmax(random_tensor({10}, rng), 0);
  Tensor cum = random_tensor({10}, rng, 0, 2);
  LsaStep out = lsa_windowed_step(s, num::matmul(memory, p.memory_w), prev, cum, 3, 0.5, p);
  auto expected = oracle_plain_lsa(s, memory, prev, cum, p);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(out.alpha.values()[j], expected[j], 1e-12);
  for (std::size_t j = 0; j < 10; ++j) {
    EXPECT_NEAR(out.cumulative.values()[j], cum.values()[j] + expected[j], 1e-12);
  }
}

TEST(Lsa, ZeroOutsideWindowAndNormalizedInside) {
  Rng rng(10);
  num::NoGradGuard no_grad;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t enc_len = static_cast<std::size_t>(rng.uniform_int(1, 90));
    const std::size_t step = static_cast<std::size_t>(rng.uniform_int(0, 200));
    const double ratio = rng.uniform(0.1, 1.5);
    LsaParams p = make_lsa_params(4, 3, 6, 3, 31, 20, rng);
    Tensor memory = random_tensor({enc_len, 3}, rng);
    Tensor prev = num::softmax(random_tensor({enc_len}, rng), 0);
    LsaStep out = lsa_windowed_step(random_tensor({4}, rng), num::matmul(memory, p.memory_w), prev,
                                    prev, step, ratio, p);
    const auto [lo, hi] = lsa_window(step, ratio, enc_len, 20);
    ASSERT_LE(hi - lo, 20u);
    double inside = 0.0;
    for (std::size_t j = 0; j < enc_len; ++j) {
      const double a = out.alpha.values()[j];
      if (j < lo || j >= hi) {
        ASSERT_EQ(a, 0.0) << "trial " << trial << " j " << j;
      } else {
        ASSERT_GE(a, 0.0);
        inside += a;
      }
    }
    ASSERT_NEAR(inside, 1.0, 1e-12);
  }
}

TEST(Lsa, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  LsaParams p = make_lsa_params(4, 3, 5, 2, 5, 6, rng);
  p.bias = random_tensor({5}, rng).set_requires_grad(true);
  Tensor memory = random_tensor({9, 3}, rng).set_requires_grad(true);
  Tensor s = random_tensor({4}, rng).set_requires_grad(true);
  Tensor weights = random_tensor({9}, rng);
  auto loss = [&] {
    Tensor pm = num::matmul(memory, p.memory_w);
    Tensor a0 = lsa_initial_alpha(9);
    LsaStep one = lsa_windowed_step(s, pm, a0, a0, 4, 1.0, p);
    LsaStep two = lsa_windowed_step(s, pm, one.alpha, one.cumulative, 5, 1.0, p);
    return num::sum(num::mul(two.alpha, weights));
  };
  auto report = num::gradcheck(loss, {{"s", s},
                                      {"memory", memory},
                                      {"query_w", p.query_w},
                                      {"memory_w", p.memory_w},
                                      {"loc_conv", p.loc_conv},
                                      {"loc_w", p.loc_w},
                                      {"bias", p.bias},
                                      {"v", p.v}});
  EXPECT_LT(report.worst.rel_error, 1e-6) << report.worst.tensor << "[" << report.worst.index << "]";
}

TEST(AlignmentError, OneHotAtOracleIsZero) {
  Tensor a = Tensor::mat({{1, 0, 0}, {0, 0, 1}});
  EXPECT_EQ(alignment_error(a, {0, 2}), 0.0);
}

TEST(AlignmentError, UniformRow) {
  EXPECT_NEAR(alignment_error(Tensor::mat({{1, 1, 1}}), {0}), 1.0 / 3.0, 1e-15);
}

TEST(AlignmentError, MatchesIndependentRecomputation) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t steps = 1 + trial % 7, enc_len = 2 + trial % 11;
    Tensor a = random_tensor({steps, enc_len}, rng, 0.0, 1.0);
    std::vector<double> oracle(steps);
    for (double& o : oracle) o = rng.uniform(0, static_cast<double>(enc_len - 1));
    double expected = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      std::vector<double> row(enc_len);
      double z = 0.0;
      for (std::size_t j = 0; j < enc_len; ++j) z += (row[j] = a.at(i, j));
      double pos = 0.0;
      for (std::size_t j = 0; j < enc_len; ++j) pos += static_cast<double>(j) * row[j] / z;
      expected += std::abs(pos - oracle[i]) / static_cast<double>(enc_len);
    }
    expected /= static_cast<double>(steps);
    EXPECT_NEAR(alignment_error(a, oracle), expected, 1e-12);
  }
  EXPECT_THROW(alignment_error(Tensor::mat({{1, 1}}), {0, 1}), DimensionError);
}

TEST(AlignmentError, DeadRowScoresOne) {
  EXPECT_EQ(alignment_error(Tensor::mat({{0, 0, 0}}), {1}), 1.0);
}

TEST(DecoderOracle, CentresOfEmittedFrames) {
  // r = 2: step i emits mel frames 2i, 2i+1 (centre 2i + 0.5); PPG frame j
  // sits at mel centre 3j + 1.
  auto o = decoder_oracle(5, 2, 3);
  EXPECT_EQ(o[0], 0.0);
  EXPECT_DOUBLE_EQ(o[1], 1.5 / 3.0);
  EXPECT_DOUBLE_EQ(o[2], 3.5 / 3.0);
  EXPECT_EQ(o[4], 2.0);
}

TEST(Export, PgmHeaderAndScaling) {
  auto path = std::filesystem::temp_directory_path() / "ppg2mel_align.pgm";
  write_alignment_pgm(path, Tensor::mat({{0, 0.5, 1}, {1, 1, 0}}));
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 0]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 1]), 128);
  EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 2]), 255);
}

TEST(Export, CsvRows) {
  auto path = std::filesystem::temp_directory_path() / "ppg2mel_align.csv";
  write_alignment_csv(path, Tensor::mat({{0.25, 1}, {2, 3}}));
  std::ifstream in(path);
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  std::filesystem::remove(path);
  EXPECT_EQ(l1, "0.25,1");
  EXPECT_EQ(l2, "2,3");
}

}  // namespace
}  // namespace ppg2mel::attention
