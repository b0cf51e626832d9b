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

#ifndef BNRECT_NORMALIZATION_H_
#define BNRECT_NORMALIZATION_H_

#include <span>
#include <vector>

#include "bnrect/tensor.h"

namespace bnrect {

inline constexpr float kDefaultEpsilon = 1e-5f;
inline constexpr float kDefaultMomentum = 0.1f;

// Per-channel mean and biased variance of a batch, reduced over (N, H, W).
struct BatchStats {
  std::vector<float> mean;
  std::vector<float> variance;

  int channels() const { return static_cast<int>(mean.size()); }
};

// Learnable affine parameters plus the population statistics used at
// inference.
struct BNState {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> pop_mean;
  std::vector<float> pop_var;
  float epsilon = kDefaultEpsilon;
  float momentum = kDefaultMomentum;

  int channels() const { return static_cast<int>(gamma.size()); }

  // gamma = 1, beta = 0, pop_mean = 0, pop_var = 1.
  static BNState fresh(int channels, float epsilon = kDefaultEpsilon,
                       float momentum = kDefaultMomentum);

  // Throws SemanticError on length mismatch, negative variance,
  // epsilon <= 0 or momentum outside (0, 1].
  void validate() const;
};

// Per-(sample, channel) statistics over H*W, stored n-major (index n*C+c).
struct InstanceStats {
  int n = 0;
  int c = 0;
  std::vector<float> mean;
  std::vector<float> variance;
};

BatchStats compute_batch_stats(const Tensor& x);

// y = gamma * (x - mean) / sqrt(var + eps) + beta with the given statistics.
// Every batch-norm forward path normalizes through this function.
Tensor bn_normalize(const Tensor& x, const BNState& state,
                    std::span<const float> mean, std::span<const float> var);

struct BnTrainResult {
  Tensor y;
  BNState state;     // population stats advanced by the moving average
  BatchStats batch;  // statistics used to normalize y
};

// Normalizes with batch statistics; pop <- (1 - m) * pop + m * batch.
BnTrainResult bn_forward_train(const Tensor& x, const BNState& state);

// Normalizes with the population statistics.
Tensor bn_forward_eval(const Tensor& x, const BNState& state);

InstanceStats compute_instance_stats(const Tensor& x);

Tensor in_forward(const Tensor& x, std::span<const float> gamma,
                  std::span<const float> beta, float epsilon);

// Normalizes each sample over groups of C/groups consecutive channels.
Tensor gn_forward(const Tensor& x, int groups, std::span<const float> gamma,
                  std::span<const float> beta, float epsilon);

}  // namespace bnrect

#endif  // BNRECT_NORMALIZATION_H_
