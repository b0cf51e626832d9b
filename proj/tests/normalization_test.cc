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

#include <cmath>

#include <gtest/gtest.h>

#include "bnrect/errors.h"
#include "bnrect/normalization.h"
#include "test_util.h"

namespace bnrect {
namespace {

using testing::naive_channel_stats;
using testing::random_tensor;
using testing::random_vec;

BNState random_state(int c, RngStream& rng) {
  BNState s = BNState::fresh(c);
  s.gamma = random_vec(c, rng, 0.5f, 1.5f);
  s.beta = random_vec(c, rng, -0.5f, 0.5f);
  s.pop_mean = random_vec(c, rng, -0.3f, 0.3f);
  s.pop_var = random_vec(c, rng, 0.2f, 2.0f);
  return s;
}

TEST(BatchStatsTest, ConstantTensor) {
  const BatchStats s = compute_batch_stats(Tensor(Shape{3, 2, 4, 4}, 0.5f));
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(s.mean[c], 0.5f);
    EXPECT_EQ(s.variance[c], 0.0f);
  }
}

TEST(BatchStatsTest, TwoSamplesBiasedVariance) {
  const BatchStats s = compute_batch_stats(Tensor(Shape{2, 1, 1, 1}, std::vector<float>{0, 1}));
  EXPECT_EQ(s.mean[0], 0.5f);
  EXPECT_EQ(s.variance[0], 0.25f);
}

TEST(BatchStatsTest, RejectsEmptyBatch) {
  EXPECT_THROW(compute_batch_stats(Tensor(Shape{0, 2, 2, 2})), ShapeError);
}

TEST(BatchStatsTest, SpecExampleMatchesOracle) {
  RngStream rng(1, 0);
  const Tensor x = random_tensor({8, 4, 6, 6}, rng);
  const BatchStats s = compute_batch_stats(x);
  const auto want = naive_channel_stats(x);
  for (int c = 0; c < 4; ++c) {
    EXPECT_NEAR(s.mean[c], want.mean[c], 1e-6);
    EXPECT_NEAR(s.variance[c], want.var[c], 1e-6);
  }
}

TEST(BatchStatsTest, PropertyMatchesOracle) {
  RngStream rng(1, 1);
  for (int t = 0; t < 120; ++t) {
    const Shape sh{1 + static_cast<int>(rng.uniform_int(6)), 1 + static_cast<int>(rng.uniform_int(6)),
                   1 + static_cast<int>(rng.uniform_int(7)), 1 + static_cast<int>(rng.uniform_int(7))};
    const Tensor x = random_tensor(sh, rng, -2.0f, 3.0f);
    const BatchStats s = compute_batch_stats(x);
    const auto want = naive_channel_stats(x);
    for (int c = 0; c < sh.c; ++c) {
      ASSERT_NEAR(s.mean[c], want.mean[c], 1e-6) << t;
      ASSERT_NEAR(s.variance[c], want.var[c], 1e-6) << t;
      ASSERT_GE(s.variance[c], 0.0f);
    }
  }
}

TEST(BnTrainTest, NormalizesToZeroMeanUnitVariance) {
  RngStream rng(2, 0);
  const Tensor x = random_tensor({6, 3, 5, 5}, rng, -4.0f, 7.0f);
  const BnTrainResult r = bn_forward_train(x, BNState::fresh(3));
  const auto st = naive_channel_stats(r.y);
  const auto in = naive_channel_stats(x);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(st.mean[c], 0.0, 1e-5);
    EXPECT_NEAR(st.var[c], in.var[c] / (in.var[c] + 1e-5), 1e-4);
  }
}

TEST(BnTrainTest, MomentumOneCopiesBatchStats) {
  RngStream rng(2, 1);
  const Tensor x = random_tensor({4, 3, 3, 3}, rng);
  BNState s = random_state(3, rng);
  s.momentum = 1.0f;
  const BnTrainResult r = bn_forward_train(x, s);
  const BatchStats b = compute_batch_stats(x);
  EXPECT_EQ(r.state.pop_mean, b.mean);
  EXPECT_EQ(r.state.pop_var, b.variance);
  EXPECT_EQ(r.state.gamma, s.gamma);
  EXPECT_EQ(r.state.beta, s.beta);
}

TEST(BnTrainTest, MovingAverageAndScalarOracle) {
  RngStream rng(2, 2);
  for (int t = 0; t < 100; ++t) {
    const Shape sh{2 + static_cast<int>(rng.uniform_int(4)), 1 + static_cast<int>(rng.uniform_int(5)),
                   1 + static_cast<int>(rng.uniform_int(5)), 1 + static_cast<int>(rng.uniform_int(5))};
    const Tensor x = random_tensor(sh, rng);
    const BNState s = random_state(sh.c, rng);
    const BnTrainResult r = bn_forward_train(x, s);
    const auto st = naive_channel_stats(x);
    for (int c = 0; c < sh.c; ++c) {
      const double m = s.momentum;
      ASSERT_NEAR(r.state.pop_mean[c], (1 - m) * s.pop_mean[c] + m * st.mean[c], 1e-6);
      ASSERT_NEAR(r.state.pop_var[c], (1 - m) * s.pop_var[c] + m * st.var[c], 1e-6);
      for (int n = 0; n < sh.n; ++n)
        for (int i = 0; i < sh.h; ++i)
          for (int j = 0; j < sh.w; ++j) {
            const double want = s.gamma[c] * (x.at(n, c, i, j) - st.mean[c]) /
                                    std::sqrt(st.var[c] + s.epsilon) +
                                s.beta[c];
            ASSERT_NEAR(r.y.at(n, c, i, j), want, 1e-5 * std::max(1.0, std::abs(want)));
          }
    }
  }
}

TEST(BnTrainTest, MovingAverageFixpoint) {
  RngStream rng(2, 3);
  const Tensor x = random_tensor({5, 4, 4, 4}, rng);
  const BatchStats b = compute_batch_stats(x);
  BNState s = BNState::fresh(4);
  s.pop_mean = b.mean;
  s.pop_var = b.variance;
  const BnTrainResult r = bn_forward_train(x, s);
  for (int c = 0; c < 4; ++c) {
    EXPECT_NEAR(r.state.pop_mean[c], s.pop_mean[c], 1e-6);
    EXPECT_NEAR(r.state.pop_var[c], s.pop_var[c], 1e-6);
  }
}

TEST(BnTrainTest, RejectsChannelMismatch) {
  EXPECT_THROW(bn_forward_train(Tensor(Shape{2, 3, 2, 2}), BNState::fresh(4)), ShapeError);
  EXPECT_THROW(bn_forward_eval(Tensor(Shape{2, 3, 2, 2}), BNState::fresh(2)), ShapeError);
}

TEST(BnEvalTest, IdentityConfiguration) {
  RngStream rng(3, 0);
  const Tensor x = random_tensor({2, 2, 3, 3}, rng);
  BNState s = BNState::fresh(2);
  s.pop_mean = {0, 0};
  s.pop_var = {1, 1};
  const float g = std::sqrt(1.0f + s.epsilon);
  s.gamma = {g, g};
  const Tensor y = bn_forward_eval(x, s);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-7);
}

TEST(BnEvalTest, InputAtPopulationMeanGivesBeta) {
  RngStream rng(3, 1);
  BNState s = random_state(3, rng);
  Tensor x(Shape{2, 3, 2, 2});
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (float& v : x.mutable_plane(n, c)) v = s.pop_mean[c];
  const Tensor y = bn_forward_eval(x, s);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (float v : y.plane(n, c)) EXPECT_EQ(v, s.beta[c]);
}

TEST(BnEvalTest, PureAndMatchesOracle) {
  RngStream rng(3, 2);
  for (int t = 0; t < 100; ++t) {
    const Shape sh{1 + static_cast<int>(rng.uniform_int(4)), 1 + static_cast<int>(rng.uniform_int(5)),
                   1 + static_cast<int>(rng.uniform_int(5)), 1 + static_cast<int>(rng.uniform_int(5))};
    const Tensor x = random_tensor(sh, rng);
    const BNState s = random_state(sh.c, rng);
    const Tensor y = bn_forward_eval(x, s);
    ASSERT_TRUE(bitwise_equal(y, bn_forward_eval(x, s)));
    for (int n = 0; n < sh.n; ++n)
      for (int c = 0; c < sh.c; ++c)
        for (int i = 0; i < sh.h; ++i)
          for (int j = 0; j < sh.w; ++j) {
            const double want = s.gamma[c] * (x.at(n, c, i, j) - s.pop_mean[c]) /
                                    std::sqrt(static_cast<double>(s.pop_var[c]) + s.epsilon) +
                                s.beta[c];
            ASSERT_NEAR(y.at(n, c, i, j), want, 1e-5);
          }
  }
}

TEST(BnEvalTest, PopulationSetToBatchStatsNormalizes) {
  RngStream rng(3, 3);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_tensor({4, 3, 5, 5}, rng, -2.0f, 5.0f);
    BNState s = random_state(3, rng);
    const BatchStats b = compute_batch_stats(x);
    s.pop_mean = b.mean;
    s.pop_var = b.variance;
    const auto st = naive_channel_stats(bn_forward_eval(x, s));
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(st.mean[c], s.beta[c], 1e-4);
      const double want = s.gamma[c] * s.gamma[c] * b.variance[c] / (b.variance[c] + s.epsilon);
      EXPECT_NEAR(st.var[c] / want, 1.0, 1e-3);
    }
  }
}

TEST(BnStateTest, ValidateRejectsBadStates) {
  BNState s = BNState::fresh(2);
  s.pop_var[1] = -0.1f;
  EXPECT_THROW(s.validate(), SemanticError);
  s = BNState::fresh(2);
  s.epsilon = 0.0f;
  EXPECT_THROW(s.validate(), SemanticError);
  s = BNState::fresh(2);
  s.beta.resize(3);
  EXPECT_THROW(s.validate(), SemanticError);
  s = BNState::fresh(2);
  s.momentum = 1.5f;
  EXPECT_THROW(s.validate(), SemanticError);
}

TEST(InstanceNormTest, StatsAndBatchOfOne) {
  RngStream rng(4, 0);
  const Tensor c(Shape{2, 2, 3, 3}, 0.7f);
  const InstanceStats cs = compute_instance_stats(c);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(cs.mean[i], 0.7f, 1e-7);
    EXPECT_EQ(cs.variance[i], 0.0f);
  }
  const Tensor x = random_tensor({1, 3, 4, 4}, rng);
  const InstanceStats is = compute_instance_stats(x);
  const BatchStats bs = compute_batch_stats(x);
  EXPECT_EQ(is.mean, bs.mean);
  EXPECT_EQ(is.variance, bs.variance);
  EXPECT_THROW(compute_instance_stats(Tensor(Shape{1, 1, 0, 3})), ShapeError);
}

TEST(InstanceNormTest, ZeroMeanAndBatchOfOneEquivalence) {
  RngStream rng(4, 1);
  const Tensor x = random_tensor({3, 4, 5, 5}, rng, -1.0f, 4.0f);
  const std::vector<float> ones(4, 1.0f), zeros(4, 0.0f);
  const Tensor y = in_forward(x, ones, zeros, kDefaultEpsilon);
  for (int n = 0; n < 3; ++n)
    for (int c = 0; c < 4; ++c) {
      double s = 0;
      for (float v : y.plane(n, c)) s += v;
      EXPECT_NEAR(s / 25.0, 0.0, 1e-5);
    }
  const Tensor one = x.slice_batch(1, 1);
  const Tensor a = in_forward(one, ones, zeros, kDefaultEpsilon);
  const Tensor b = bn_forward_train(one, BNState::fresh(4)).y;
  EXPECT_LE(testing::max_abs_diff(a, b), 1e-6);
}

TEST(InstanceNormTest, ScalarOracle) {
  RngStream rng(4, 2);
  for (int t = 0; t < 100; ++t) {
    const Shape sh{1 + static_cast<int>(rng.uniform_int(3)), 1 + static_cast<int>(rng.uniform_int(4)),
                   1 + static_cast<int>(rng.uniform_int(5)), 1 + static_cast<int>(rng.uniform_int(5))};
    const Tensor x = random_tensor(sh, rng);
    const std::vector<float> g = random_vec(sh.c, rng, 0.5f, 1.5f), b = random_vec(sh.c, rng);
    const Tensor y = in_forward(x, g, b, 1e-3f);
    for (int n = 0; n < sh.n; ++n)
      for (int c = 0; c < sh.c; ++c) {
        double m = 0, v = 0;
        for (float e : x.plane(n, c)) m += e;
        m /= sh.h * sh.w;
        for (float e : x.plane(n, c)) v += (e - m) * (e - m);
        v /= sh.h * sh.w;
        for (int i = 0; i < sh.h; ++i)
          for (int j = 0; j < sh.w; ++j) {
            const double want = g[c] * (x.at(n, c, i, j) - m) / std::sqrt(v + 1e-3) + b[c];
            ASSERT_NEAR(y.at(n, c, i, j), want, 1e-5 * std::max(1.0, std::abs(want)));
          }
      }
  }
}

TEST(GroupNormTest, Degeneracies) {
  RngStream rng(5, 0);
  const Tensor x = random_tensor({3, 4, 4, 4}, rng);
  const std::vector<float> g = random_vec(4, rng, 0.5f, 1.5f), b = random_vec(4, rng);
  EXPECT_TRUE(bitwise_equal(gn_forward(x, 4, g, b, 1e-5f), in_forward(x, g, b, 1e-5f)));
  // groups = 1 on one sample normalizes over all channels jointly.
  const Tensor one = x.slice_batch(0, 1);
  const std::vector<float> ones(4, 1.0f), zeros(4, 0.0f);
  const Tensor y = gn_forward(one, 1, ones, zeros, 1e-5f);
  double m = 0, v = 0;
  for (std::size_t i = 0; i < one.size(); ++i) m += one[i];
  m /= one.size();
  for (std::size_t i = 0; i < one.size(); ++i) v += (one[i] - m) * (one[i] - m);
  v /= one.size();
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_NEAR(y[i], (one[i] - m) / std::sqrt(v + 1e-5), 1e-5);
  }
  // With one channel, groups = 1 on a single sample equals train-mode BN.
  const Tensor c1 = random_tensor({1, 1, 5, 5}, rng);
  const std::vector<float> o1 = {1.0f}, z1 = {0.0f};
  EXPECT_LE(testing::max_abs_diff(gn_forward(c1, 1, o1, z1, 1e-5f),
                                  bn_forward_train(c1, BNState::fresh(1)).y),
            1e-6);
}

TEST(GroupNormTest, RejectsIndivisibleGroups) {
  const std::vector<float> g(6, 1.0f), b(6, 0.0f);
  EXPECT_THROW(gn_forward(Tensor(Shape{1, 6, 2, 2}), 4, g, b, 1e-5f), ShapeError);
  EXPECT_THROW(gn_forward(Tensor(Shape{1, 6, 2, 2}), 0, g, b, 1e-5f), ShapeError);
}

TEST(GroupNormTest, ScalarOracle) {
  RngStream rng(5, 1);
  for (int t = 0; t < 100; ++t) {
    const int groups = 1 + static_cast<int>(rng.uniform_int(3));
    const int per = 1 + static_cast<int>(rng.uniform_int(3));
    const Shape sh{1 + static_cast<int>(rng.uniform_int(3)), groups * per,
                   1 + static_cast<int>(rng.uniform_int(4)), 1 + static_cast<int>(rng.uniform_int(4))};
    const Tensor x = random_tensor(sh, rng);
    const std::vector<float> g = random_vec(sh.c, rng, 0.5f, 1.5f), b = random_vec(sh.c, rng);
    const Tensor y = gn_forward(x, groups, g, b, 1e-4f);
    for (int n = 0; n < sh.n; ++n)
      for (int gi = 0; gi < groups; ++gi) {
        double m = 0, v = 0;
        const int cnt = per * sh.h * sh.w;
        for (int c = gi * per; c < (gi + 1) * per; ++c)
          for (float e : x.plane(n, c)) m += e;
        m /= cnt;
        for (int c = gi * per; c < (gi + 1) * per; ++c)
          for (float e : x.plane(n, c)) v += (e - m) * (e - m);
        v /= cnt;
        for (int c = gi * per; c < (gi + 1) * per; ++c)
          for (int i = 0; i < sh.h; ++i)
            for (int j = 0; j < sh.w; ++j) {
              const double want = g[c] * (x.at(n, c, i, j) - m) / std::sqrt(v + 1e-4) + b[c];
              ASSERT_NEAR(y.at(n, c, i, j), want, 1e-5 * std::max(1.0, std::abs(want)));
            }
      }
  }
}

}  // namespace
}  // namespace bnrect
