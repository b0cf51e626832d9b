// Copyright 2026 The bnrect Authors.
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

#ifndef BNRECT_TENSOR_H_
#define BNRECT_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bnrect {

// Extents of a 4-D (N, C, H, W) array.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const { return static_cast<std::size_t>(c) * h * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense row-major NCHW array. Operations in this library treat tensors as
// values: they read their inputs and return freshly allocated results.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const T> data() const { return data_; }
  std::span<T> mutable_data() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }
  T at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  // Contiguous H*W plane for (n, c).
  std::span<const T> plane(int n, int c) const {
    return std::span<const T>(data_).subspan(offset(n, c, 0, 0),
                                             shape_.plane());
  }
  std::span<T> mutable_plane(int n, int c) {
    return std::span<T>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
  }

  // Rows [begin, begin + count) of the batch dimension.
  BasicTensor slice_batch(int begin, int count) const;
  BasicTensor reshaped(Shape shape) const;

  bool all_finite() const;

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// Concatenates along the batch dimension; all inputs share (C, H, W).
Tensor concat_batch(std::span<const Tensor> parts);

// Bitwise equality of contents and shapes (distinguishes -0.0 and NaN
// payloads, unlike operator==).
bool bitwise_equal(const Tensor& a, const Tensor& b);

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  std::vector<To> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return BasicTensor<To>(t.shape(), std::move(out));
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace bnrect

#endif  // BNRECT_TENSOR_H_
