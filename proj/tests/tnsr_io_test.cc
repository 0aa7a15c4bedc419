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

#include <cstring>
#include <sstream>

#include "ppg2mel/num/errors.h"
#include "ppg2mel/num/rng.h"
#include "ppg2mel/num/tnsr_io.h"

namespace ppg2mel::num {
namespace {

TEST(Tnsr, ByteLayout) {
  std::ostringstream os;
  write_tnsr(os, Tensor::from({2, 1}, {1.0, -2.0}));
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 4u + 2 + 2 + 2 * 8 + 2 * 8);
  EXPECT_EQ(bytes.substr(0, 4), "TNSR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, LE
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 2);  // rank
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);  // extent 0
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1);  // extent 1
  double v;
  std::memcpy(&v, bytes.data() + 32, 8);
  EXPECT_EQ(v, -2.0);
}

TEST(Tnsr, RandomRoundTripsAreExact) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Shape shape(rng.uniform_int(1, 4));
    for (auto& e : shape) e = rng.uniform_int(1, 5);
    Tensor t = Tensor::zeros(shape);
    for (double& x : t.mutable_data()) x = rng.normal(0, 1e3);
    std::stringstream ss;
    write_tnsr(ss, t);
    Tensor back = read_tnsr(ss);
    EXPECT_EQ(back.shape(), t.shape());
    EXPECT_EQ(back.values(), t.values());
  }
}

TEST(Tnsr, RejectsCorruptInput) {
  std::istringstream bad_magic("TNSX....");
  EXPECT_THROW(read_tnsr(bad_magic), FormatError);
  std::ostringstream os;
  write_tnsr(os, Tensor::vec({1, 2, 3}));
  std::string truncated = os.str().substr(0, os.str().size() - 3);
  std::istringstream is(truncated);
  EXPECT_THROW(read_tnsr(is), FormatError);
}

TEST(Checkpoint, NamedRecordsRoundTrip) {
  NamedTensors in{{"encoder.w", Tensor::mat({{1, 2}, {3, 4}})}, {"b", Tensor::vec({5})}};
  std::stringstream ss;
  write_checkpoint(ss, in);
  NamedTensors out = read_checkpoint(ss);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].first, "encoder.w");
  EXPECT_EQ(out[0].second.values(), in[0].second.values());
  EXPECT_EQ(out[1].first, "b");
}

}  // namespace
}  // namespace ppg2mel::num
