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

#include "podscale/tensor.h"

#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "podscale/status_macros.h"

namespace podscale {

int64_t ShapeElementCount(std::span<const int64_t> shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), values_(ShapeElementCount(shape_), 0.0f) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  PODSCALE_CHECK(static_cast<int64_t>(values_.size()) ==
                 ShapeElementCount(shape_));
}

absl::StatusOr<Tensor> Tensor::Create(std::vector<int64_t> shape,
                                      std::vector<float> values) {
  for (int64_t d : shape) {
    if (d < 0) {
      return absl::InvalidArgumentError("negative tensor extent");
    }
  }
  if (static_cast<int64_t>(values.size()) != ShapeElementCount(shape)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "shape [%s] needs %d values, got %d", absl::StrJoin(shape, ","),
        ShapeElementCount(shape), values.size()));
  }
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::Matrix(int64_t rows, int64_t cols, std::vector<float> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::string Tensor::ShapeString() const {
  return absl::StrCat("[", absl::StrJoin(shape_, "x"), "]");
}

}  // namespace podscale
