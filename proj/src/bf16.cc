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

namespace podscale {

absl::string_view ElemTypeName(ElemType type) {
  return type == ElemType::kBF16 ? "bf16" : "f32";
}

void RoundToBf16InPlace(std::span<float> values) {
#pragma omp parallel for schedule(static) if (values.size() > (1u << 16))
  for (int64_t i = 0; i < static_cast<int64_t>(values.size()); ++i) {
    values[i] = RoundToBf16(values[i]);
  }
}

}  // namespace podscale
