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

#include "bnrect/ops.h"

#include "bnrect/errors.h"
#include "kernels.h"

namespace bnrect {

Tensor conv2d(const Tensor& input, const Tensor& weights,
              std::span<const float> bias, int stride, int padding) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  if (stride <= 0 || padding < 0) {
    throw ShapeError("conv2d: stride must be positive and padding non-negative");
  }
  if (ws.h != ws.w) {
    throw ShapeError("conv2d: non-square kernel " + ws.str());
  }
  if (is.c != ws.c) {
    throw ShapeError("conv2d: input " + is.str() + " has " +
                     std::to_string(is.c) + " channels but weights " + ws.str() +
                     " expect " + std::to_string(ws.c));
  }
  if (is.h + 2 * padding < ws.h || is.w + 2 * padding < ws.w) {
    throw ShapeError("conv2d: kernel " + ws.str() +
                     " does not fit padded input " + is.str());
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(ws.n)) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) +
                     " for weights " + ws.str());
  }
  Shape os{is.n, ws.n, kernels::conv_out_extent(is.h, ws.h, stride, padding),
           kernels::conv_out_extent(is.w, ws.w, stride, padding)};
  Tensor out(os);
  kernels::conv2d_forward<float>(input.data(), is, weights.data(), ws.n, ws.h,
                                 bias, stride, padding, out.mutable_data());
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  kernels::relu_forward<float>(x.data(), y.mutable_data());
  return y;
}

Tensor avgpool2d(const Tensor& x, int k) {
  if (k <= 0 || x.h() < k || x.w() < k) {
    throw ShapeError("avgpool2d: window " + std::to_string(k) +
                     " does not fit " + x.shape().str());
  }
  Tensor y(Shape{x.n(), x.c(), x.h() / k, x.w() / k});
  kernels::avgpool_forward<float>(x.data(), x.shape(), k, y.mutable_data());
  return y;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.h() < 1 || x.w() < 1) {
    throw ShapeError("global_avg_pool: empty spatial extent " + x.shape().str());
  }
  Tensor y(Shape{x.n(), x.c(), 1, 1});
  kernels::global_avg_pool_forward<float>(x.data(), x.shape(), y.mutable_data());
  return y;
}

Tensor dense(const Tensor& x, const Tensor& weights, std::span<const float> bias) {
  const int d = static_cast<int>(x.shape().sample());
  const Shape& ws = weights.shape();
  if (ws.c * ws.h * ws.w != d) {
    throw ShapeError("dense: input " + x.shape().str() + " has " +
                     std::to_string(d) + " features but weights " + ws.str() +
                     " expect " + std::to_string(ws.c * ws.h * ws.w));
  }
  if (bias.size() != static_cast<std::size_t>(ws.n)) {
    throw ShapeError("dense: bias length " + std::to_string(bias.size()) +
                     " for weights " + ws.str());
  }
  Tensor y(Shape{x.n(), ws.n, 1, 1});
  kernels::dense_forward<float>(x.data(), x.n(), d, weights.data(), bias, ws.n,
                                y.mutable_data());
  return y;
}

XentResult softmax_xent(const Tensor& logits, std::span<const int> labels) {
  const int k = static_cast<int>(logits.shape().sample());
  if (labels.size() != static_cast<std::size_t>(logits.n())) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                     " labels for logits " + logits.shape().str());
  }
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw SemanticError("softmax_xent: label " + std::to_string(label) +
                          " outside [0, " + std::to_string(k) + ")");
    }
  }
  XentResult r;
  r.probs = Tensor(Shape{logits.n(), k, 1, 1});
  r.loss = kernels::softmax_xent<float>(logits.data(), logits.n(), k, labels,
                                        r.probs.mutable_data());
  return r;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const int k = static_cast<int>(logits.shape().sample());
  std::vector<int> out(logits.n());
  for (int n = 0; n < logits.n(); ++n) {
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (logits[static_cast<std::size_t>(n) * k + j] >
          logits[static_cast<std::size_t>(n) * k + best]) {
        best = j;
      }
    }
    out[n] = best;
  }
  return out;
}

}  // namespace bnrect
