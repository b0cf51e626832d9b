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

#include "bnrect/normalization.h"

#include <string>

#include "bnrect/errors.h"
#include "kernels.h"

namespace bnrect {
namespace {

void check_affine(const char* op, const Tensor& x, std::span<const float> gamma,
                  std::span<const float> beta) {
  if (gamma.size() != static_cast<std::size_t>(x.c()) ||
      beta.size() != static_cast<std::size_t>(x.c())) {
    throw ShapeError(std::string(op) + ": input " + x.shape().str() + " has " +
                     std::to_string(x.c()) + " channels but parameters have " +
                     std::to_string(gamma.size()));
  }
}

void check_state(const char* op, const Tensor& x, const BNState& state) {
  if (state.channels() != x.c()) {
    throw ShapeError(std::string(op) + ": input " + x.shape().str() + " has " +
                     std::to_string(x.c()) + " channels but state has " +
                     std::to_string(state.channels()));
  }
}

}  // namespace

BNState BNState::fresh(int channels, float epsilon, float momentum) {
  BNState s;
  s.gamma.assign(channels, 1.0f);
  s.beta.assign(channels, 0.0f);
  s.pop_mean.assign(channels, 0.0f);
  s.pop_var.assign(channels, 1.0f);
  s.epsilon = epsilon;
  s.momentum = momentum;
  return s;
}

void BNState::validate() const {
  const std::size_t c = gamma.size();
  if (beta.size() != c || pop_mean.size() != c || pop_var.size() != c) {
    throw SemanticError("BNState vectors have unequal lengths");
  }
  for (float v : pop_var) {
    if (!(v >= 0.0f)) throw SemanticError("BNState pop_var has a negative entry");
  }
  if (!(epsilon > 0.0f)) throw SemanticError("BNState epsilon must be positive");
  if (!(momentum > 0.0f && momentum <= 1.0f)) {
    throw SemanticError("BNState momentum must lie in (0, 1]");
  }
}

BatchStats compute_batch_stats(const Tensor& x) {
  if (x.n() < 1 || x.h() < 1 || x.w() < 1) {
    throw ShapeError("compute_batch_stats: empty batch " + x.shape().str());
  }
  BatchStats s;
  s.mean.resize(x.c());
  s.variance.resize(x.c());
  kernels::channel_stats<float>(x.data(), x.shape(), s.mean, s.variance);
  return s;
}

Tensor bn_normalize(const Tensor& x, const BNState& state,
                    std::span<const float> mean, std::span<const float> var) {
  check_state("bn_normalize", x, state);
  if (mean.size() != static_cast<std::size_t>(x.c()) ||
      var.size() != static_cast<std::size_t>(x.c())) {
    throw ShapeError("bn_normalize: statistics length does not match " +
                     x.shape().str());
  }
  Tensor y(x.shape());
  kernels::normalize_channels<float>(x.data(), x.shape(), mean, var,
                                     state.gamma, state.beta, state.epsilon,
                                     y.mutable_data());
  return y;
}

BnTrainResult bn_forward_train(const Tensor& x, const BNState& state) {
  check_state("bn_forward_train", x, state);
  BnTrainResult r;
  r.batch = compute_batch_stats(x);
  r.y = bn_normalize(x, state, r.batch.mean, r.batch.variance);
  r.state = state;
  const float m = state.momentum;
  for (int c = 0; c < x.c(); ++c) {
    r.state.pop_mean[c] = (1.0f - m) * state.pop_mean[c] + m * r.batch.mean[c];
    r.state.pop_var[c] = (1.0f - m) * state.pop_var[c] + m * r.batch.variance[c];
  }
  return r;
}

Tensor bn_forward_eval(const Tensor& x, const BNState& state) {
  return bn_normalize(x, state, state.pop_mean, state.pop_var);
}

InstanceStats compute_instance_stats(const Tensor& x) {
  if (x.h() < 1 || x.w() < 1) {
    throw ShapeError("compute_instance_stats: empty spatial extent " +
                     x.shape().str());
  }
  InstanceStats s;
  s.n = x.n();
  s.c = x.c();
  s.mean.resize(static_cast<std::size_t>(x.n()) * x.c());
  s.variance.resize(s.mean.size());
  kernels::instance_stats<float>(x.data(), x.shape(), s.mean, s.variance);
  return s;
}

Tensor in_forward(const Tensor& x, std::span<const float> gamma,
                  std::span<const float> beta, float epsilon) {
  check_affine("in_forward", x, gamma, beta);
  const InstanceStats s = compute_instance_stats(x);
  Tensor y(x.shape());
  kernels::normalize_instances<float>(x.data(), x.shape(), s.mean, s.variance,
                                      gamma, beta, epsilon, y.mutable_data());
  return y;
}

Tensor gn_forward(const Tensor& x, int groups, std::span<const float> gamma,
                  std::span<const float> beta, float epsilon) {
  check_affine("gn_forward", x, gamma, beta);
  if (groups <= 0 || x.c() % groups != 0) {
    throw ShapeError("gn_forward: " + std::to_string(x.c()) +
                     " channels are not divisible into " +
                     std::to_string(groups) + " groups");
  }
  if (x.h() < 1 || x.w() < 1) {
    throw ShapeError("gn_forward: empty spatial extent " + x.shape().str());
  }
  std::vector<float> mean(static_cast<std::size_t>(x.n()) * groups);
  std::vector<float> var(mean.size());
  kernels::group_stats<float>(x.data(), x.shape(), groups, mean, var);
  Tensor y(x.shape());
  kernels::normalize_groups<float>(x.data(), x.shape(), groups, mean, var,
                                   gamma, beta, epsilon, y.mutable_data());
  return y;
}

}  // namespace bnrect
