/* Copyright 2026 The Podscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "podscale/bf16.h"

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"

namespace podscale {
namespace {

TEST(Bf16Test, ExactValuesUnchanged) {
  EXPECT_EQ(RoundToBf16(1.0f), 1.0f);
  EXPECT_EQ(RoundToBf16(-2.5f), -2.5f);
  EXPECT_EQ(RoundToBf16(0.0f), 0.0f);
  EXPECT_TRUE(std::signbit(RoundToBf16(-0.0f)));
}

TEST(Bf16Test, HalfwayRoundsToEven) {
  EXPECT_EQ(RoundToBf16(1.0f + std::ldexp(1.0f, -9)), 1.0f);
  EXPECT_EQ(RoundToBf16(1.0f + 3 * std::ldexp(1.0f, -9)),
            1.0f + std::ldexp(1.0f, -7));
}

TEST(Bf16Test, SpecialValues) {
  const float inf = std::numeric_limits<float>::infinity();
  EXPECT_EQ(RoundToBf16(inf), inf);
  EXPECT_EQ(RoundToBf16(-inf), -inf);
  EXPECT_TRUE(std::isnan(RoundToBf16(std::numeric_limits<float>::quiet_NaN())));
  // A signalling NaN whose payload sits in the low half must stay NaN.
  EXPECT_TRUE(std::isnan(RoundToBf16(std::bit_cast<float>(0x7f800001u))));
  EXPECT_EQ(RoundToBf16(std::numeric_limits<float>::max()), inf);
}

TEST(Bf16Test, MatchesReferenceOnRandomBits) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200000; ++i) {
    const float x = std::bit_cast<float>(static_cast<uint32_t>(rng()));
    if (std::isnan(x)) continue;
    const float got = RoundToBf16(x);
    const float want = reference::Bf16Round(x);
    ASSERT_EQ(std::bit_cast<uint32_t>(got), std::bit_cast<uint32_t>(want))
        << "x bits " << std::hex << std::bit_cast<uint32_t>(x);
  }
}

TEST(Bf16Test, IdempotentAndRepresentable) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100000; ++i) {
    const float x = std::bit_cast<float>(static_cast<uint32_t>(rng()));
    if (!std::isfinite(x)) continue;
    const float once = RoundToBf16(x);
    EXPECT_TRUE(IsBf16Representable(once));
    EXPECT_EQ(std::bit_cast<uint32_t>(RoundToBf16(once)),
              std::bit_cast<uint32_t>(once));
  }
}

TEST(Bf16Test, InPlaceAndNames) {
  std::vector<float> v = {1.0f + std::ldexp(1.0f, -9), 3.0f};
  RoundToBf16InPlace(v);
  EXPECT_EQ(v[0], 1.0f);
  EXPECT_EQ(v[1], 3.0f);
  EXPECT_EQ(ElemTypeName(ElemType::kBF16), "bf16");
  EXPECT_EQ(ElementWidth(ElemType::kF32), 4);
  EXPECT_EQ(ElementWidth(ElemType::kBF16), 2);
}

}  // namespace
}  // namespace podscale
