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

#ifndef PODSCALE_BF16_H_
#define PODSCALE_BF16_H_

#include <bit>
#include <cstdint>
#include <span>

#include "absl/strings/string_view.h"

namespace podscale {

// Element type tag carried by payloads. Storage is always f32; kBF16 means
// every stored value is exactly representable in bfloat16.
enum class ElemType { kF32, kBF16 };

constexpr int ElementWidth(ElemType type) {
  return type == ElemType::kBF16 ? 2 : 4;
}

absl::string_view ElemTypeName(ElemType type);

// Rounds to the nearest bfloat16 value, ties to even. NaN stays NaN (quieted),
// infinities pass through, finite values beyond the bf16 range become inf.
inline float RoundToBf16(float x) {
  uint32_t bits = std::bit_cast<uint32_t>(x);
  if ((bits & 0x7fffffffu) > 0x7f800000u) {
    return std::bit_cast<float>((bits | 0x00400000u) & 0xffff0000u);
  }
  const uint32_t lsb = (bits >> 16) & 1u;
  bits += 0x7fffu + lsb;
  return std::bit_cast<float>(bits & 0xffff0000u);
}

inline bool IsBf16Representable(float x) {
  return (std::bit_cast<uint32_t>(x) & 0xffffu) == 0;
}

void RoundToBf16InPlace(std::span<float> values);

}  // namespace podscale

#endif  // PODSCALE_BF16_H_
