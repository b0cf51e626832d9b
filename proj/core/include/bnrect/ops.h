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

#ifndef BNRECT_OPS_H_
#define BNRECT_OPS_H_

#include <span>
#include <vector>

#include "bnrect/tensor.h"

namespace bnrect {

// Cross-correlation of `input` [N,Cin,H,W] with `weights` [Cout,Cin,k,k].
// `bias` is empty or has Cout entries. Output extents are
// floor((H + 2*padding - k) / stride) + 1. Throws ShapeError on mismatch.
Tensor conv2d(const Tensor& input, const Tensor& weights,
              std::span<const float> bias, int stride, int padding);

Tensor relu(const Tensor& x);

// Non-overlapping k x k average pooling with stride k.
Tensor avgpool2d(const Tensor& x, int k);

// [N,C,H,W] -> [N,C,1,1].
Tensor global_avg_pool(const Tensor& x);

// x is read as [N, C*H*W]; weights are [K, D, 1, 1]. Returns [N, K, 1, 1].
Tensor dense(const Tensor& x, const Tensor& weights, std::span<const float> bias);

struct XentResult {
  double loss = 0.0;  // mean over the batch
  Tensor probs;       // [N, K, 1, 1]
};

// Softmax cross-entropy. Throws SemanticError when a label is outside [0, K).
XentResult softmax_xent(const Tensor& logits, std::span<const int> labels);

// Index of the largest logit per row; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace bnrect

#endif  // BNRECT_OPS_H_
