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

// Hand-written backward passes for every layer kind.

#ifndef BNRECT_BACKWARD_H_
#define BNRECT_BACKWARD_H_

#include <span>
#include <vector>

#include "bnrect/tensor.h"

namespace bnrect {

struct Conv2dGrads {
  Tensor input;               // empty when not requested
  Tensor weight;
  std::vector<float> bias;    // empty when the layer has no bias
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            bool has_bias, int stride, int padding,
                            const Tensor& grad_out, bool need_input_grad);

Tensor relu_backward(const Tensor& input, const Tensor& grad_out);
Tensor avgpool2d_backward(const Tensor& grad_out, const Shape& input_shape, int k);
Tensor global_avg_pool_backward(const Tensor& grad_out, const Shape& input_shape);

struct DenseGrads {
  Tensor input;
  Tensor weight;
  std::vector<float> bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out);

struct NormGrads {
  Tensor input;
  std::vector<float> gamma;
  std::vector<float> beta;
};

// Batch norm with batch statistics (mean, var) as used in the forward pass;
// population statistics receive no gradient.
NormGrads bn_backward(const Tensor& input, std::span<const float> mean,
                      std::span<const float> var, std::span<const float> gamma,
                      float epsilon, const Tensor& grad_out);

// Group norm; instance norm is the groups == C case.
NormGrads gn_backward(const Tensor& input, int groups,
                      std::span<const float> gamma, float epsilon,
                      const Tensor& grad_out);

// d(mean NLL)/d(logits) = (probs - onehot) / N.
Tensor softmax_xent_backward(const Tensor& probs, std::span<const int> labels);

}  // namespace bnrect

#endif  // BNRECT_BACKWARD_H_
