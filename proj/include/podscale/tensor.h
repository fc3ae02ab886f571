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

#ifndef PODSCALE_TENSOR_H_
#define PODSCALE_TENSOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace podscale {

// Dense row-major f32 array.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<int64_t> shape);
  // Aborts if values.size() != product(shape); use Create() for untrusted
  // input.
  Tensor(std::vector<int64_t> shape, std::vector<float> values);

  static absl::StatusOr<Tensor> Create(std::vector<int64_t> shape,
                                       std::vector<float> values);
  static Tensor Matrix(int64_t rows, int64_t cols, std::vector<float> values);

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[i]; }
  int64_t num_elements() const { return static_cast<int64_t>(values_.size()); }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  std::vector<float>& mutable_vector() { return values_; }

  // Rank-2 accessors.
  int64_t rows() const { return shape_[0]; }
  int64_t cols() const { return shape_[1]; }
  float& at(int64_t r, int64_t c) { return values_[r * shape_[1] + c]; }
  float at(int64_t r, int64_t c) const { return values_[r * shape_[1] + c]; }

  std::string ShapeString() const;

  // Elementwise equality using float ==, so +0 == -0 and NaN != NaN.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<float> values_;
};

int64_t ShapeElementCount(std::span<const int64_t> shape);

}  // namespace podscale

#endif  // PODSCALE_TENSOR_H_
