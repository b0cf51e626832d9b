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

#include "bnrect/errors.h"
#include "bnrect/tensor.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace bnrect {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kSemantic: return "semantic";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(shape), data_(shape.numel(), fill) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor extent " + shape.str());
  }
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape.str());
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::slice_batch(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > shape_.n) {
    throw ShapeError("batch slice [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     shape_.str());
  }
  Shape s = shape_;
  s.n = count;
  const std::size_t len = shape_.sample();
  std::vector<T> out(data_.begin() + begin * len,
                     data_.begin() + (begin + count) * len);
  return BasicTensor(s, std::move(out));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(shape, data_);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_batch of zero tensors");
  Shape s = parts.front().shape();
  s.n = 0;
  for (const Tensor& t : parts) {
    if (t.c() != s.c || t.h() != s.h || t.w() != s.w) {
      throw ShapeError("concat_batch extent mismatch: " +
                       parts.front().shape().str() + " vs " + t.shape().str());
    }
    s.n += t.n();
  }
  std::vector<float> data;
  data.reserve(s.numel());
  for (const Tensor& t : parts) data.insert(data.end(), t.vec().begin(), t.vec().end());
  return Tensor(s, std::move(data));
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

}  // namespace bnrect
