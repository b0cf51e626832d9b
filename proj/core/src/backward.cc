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

#include "bnrect/backward.h"

#include <algorithm>
#include <cmath>

#include "bnrect/errors.h"
#include "kernels.h"

namespace bnrect {
namespace {

}  // namespace

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            bool has_bias, int stride, int padding,
                            const Tensor& grad_out, bool need_input_grad) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  const int k = ws.h;
  const int out_h = kernels::conv_out_extent(is.h, k, stride, padding);
  const int out_w = kernels::conv_out_extent(is.w, k, stride, padding);
  if (grad_out.shape() != Shape{is.n, ws.n, out_h, out_w}) {
    throw ShapeError("conv2d_backward: grad " + grad_out.shape().str() +
                     " does not match output of " + is.str() + " * " + ws.str());
  }
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  const std::size_t taps = static_cast<std::size_t>(is.c) * k * k;

  Conv2dGrads g;
  g.weight = Tensor(ws);
  if (has_bias) g.bias.assign(ws.n, 0.0f);
  if (need_input_grad) g.input = Tensor(is);

  // dW^T[t][co] = sum_p col[t][p] * grad[co][p], accumulated over the batch
  // with p ascending, then transposed once.
  std::vector<float> col(taps * plane);
  std::vector<float> go_t(plane * ws.n);
  std::vector<float> dw_t(taps * ws.n, 0.0f);
  std::vector<float> dcol(need_input_grad ? taps * plane : 0);
  float* dw = g.weight.mutable_data().data();
  const float* w = weight.data().data();
  for (int n = 0; n < is.n; ++n) {
    kernels::im2col(input.data().data() + n * is.sample(), is.c, is.h, is.w, k, stride,
                    padding, out_h, out_w, col.data());
    const float* go_n = grad_out.data().data() + static_cast<std::size_t>(n) * ws.n * plane;
    for (int co = 0; co < ws.n; ++co) {
      for (std::size_t p = 0; p < plane; ++p) go_t[p * ws.n + co] = go_n[co * plane + p];
    }
    kernels::gemm_acc<float>(static_cast<int>(taps), ws.n, static_cast<int>(plane), col.data(),
                             static_cast<std::ptrdiff_t>(plane), 1, go_t.data(), ws.n,
                             dw_t.data(), ws.n);
    if (has_bias) {
      for (int co = 0; co < ws.n; ++co) {
        const float* go = go_n + co * plane;
        float acc = 0.0f;
        for (std::size_t p = 0; p < plane; ++p) acc += go[p];
        g.bias[co] += acc;
      }
    }
    if (!need_input_grad) continue;
    std::fill(dcol.begin(), dcol.end(), 0.0f);
    // dcol = W^T * grad, W read transposed through strides.
    kernels::gemm_acc<float>(static_cast<int>(taps), static_cast<int>(plane), ws.n, w, 1,
                             static_cast<std::ptrdiff_t>(taps), go_n,
                             static_cast<std::ptrdiff_t>(plane), dcol.data(),
                             static_cast<std::ptrdiff_t>(plane));
    float* dx = g.input.mutable_data().data() + n * is.sample();
    std::size_t t = 0;
    for (int ci = 0; ci < is.c; ++ci) {
      float* dxc = dx + static_cast<std::size_t>(ci) * is.h * is.w;
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw, ++t) {
          const float* dc = dcol.data() + t * plane;
          for (int oh = 0; oh < out_h; ++oh) {
            const int ih = oh * stride - padding + kh;
            if (ih < 0 || ih >= is.h) continue;
            // ow range with 0 <= ow*stride - padding + kw < W.
            const int lo = std::max(0, (padding - kw + stride - 1) / stride);
            const int hi = std::min(out_w, (is.w - 1 + padding - kw) / stride + 1);
            float* drow = dxc + static_cast<std::size_t>(ih) * is.w;
            const float* srow = dc + static_cast<std::size_t>(oh) * out_w;
            for (int ow = lo; ow < hi; ++ow) drow[ow * stride - padding + kw] += srow[ow];
          }
        }
      }
    }
  }
  for (int co = 0; co < ws.n; ++co) {
    for (std::size_t t = 0; t < taps; ++t) dw[co * taps + t] = dw_t[t * ws.n + co];
  }
  return g;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (input.shape() != grad_out.shape()) throw ShapeError("relu_backward: shape mismatch");
  Tensor g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    g[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  }
  return g;
}

Tensor avgpool2d_backward(const Tensor& grad_out, const Shape& s, int k) {
  const int oh = s.h / k;
  const int ow = s.w / k;
  if (grad_out.shape() != Shape{s.n, s.c, oh, ow}) {
    throw ShapeError("avgpool2d_backward: shape mismatch");
  }
  Tensor g(s);
  const float inv = 1.0f / static_cast<float>(k * k);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          const float v = grad_out.at(n, c, i, j) * inv;
          for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) g.at(n, c, i * k + a, j * k + b) = v;
          }
        }
      }
    }
  }
  return g;
}

Tensor global_avg_pool_backward(const Tensor& grad_out, const Shape& s) {
  if (grad_out.shape() != Shape{s.n, s.c, 1, 1}) {
    throw ShapeError("global_avg_pool_backward: shape mismatch");
  }
  Tensor g(s);
  const float inv = static_cast<float>(1.0 / static_cast<double>(s.plane()));
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float v = grad_out.at(n, c, 0, 0) * inv;
      for (float& x : g.mutable_plane(n, c)) x = v;
    }
  }
  return g;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out) {
  const int batch = input.n();
  const int d = static_cast<int>(input.shape().sample());
  const int k = weight.n();
  if (grad_out.shape() != Shape{batch, k, 1, 1}) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  DenseGrads g;
  g.input = Tensor(input.shape());
  g.weight = Tensor(weight.shape());
  g.bias.assign(k, 0.0f);
  for (int n = 0; n < batch; ++n) {
    const float* x = input.data().data() + static_cast<std::size_t>(n) * d;
    float* dx = g.input.mutable_data().data() + static_cast<std::size_t>(n) * d;
    for (int j = 0; j < k; ++j) {
      const float go = grad_out[static_cast<std::size_t>(n) * k + j];
      const float* w = weight.data().data() + static_cast<std::size_t>(j) * d;
      float* dw = g.weight.mutable_data().data() + static_cast<std::size_t>(j) * d;
      for (int i = 0; i < d; ++i) {
        dx[i] += go * w[i];
        dw[i] += go * x[i];
      }
      g.bias[j] += go;
    }
  }
  return g;
}

NormGrads bn_backward(const Tensor& input, std::span<const float> mean,
                      std::span<const float> var, std::span<const float> gamma,
                      float epsilon, const Tensor& grad_out) {
  const Shape& s = input.shape();
  if (grad_out.shape() != s) throw ShapeError("bn_backward: shape mismatch");
  NormGrads g;
  g.input = Tensor(s);
  g.gamma.assign(s.c, 0.0f);
  g.beta.assign(s.c, 0.0f);
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(plane);
  for (int c = 0; c < s.c; ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(var[c]) + epsilon);
    const double mu = mean[c];
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const auto x = input.plane(n, c);
      const auto dy = grad_out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * (x[i] - mu) * inv;
      }
    }
    g.gamma[c] = static_cast<float>(sum_dy_xhat);
    g.beta[c] = static_cast<float>(sum_dy);
    const double scale = gamma[c] * inv / count;
    for (int n = 0; n < s.n; ++n) {
      const auto x = input.plane(n, c);
      const auto dy = grad_out.plane(n, c);
      auto dx = g.input.mutable_plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (x[i] - mu) * inv;
        dx[i] = static_cast<float>(scale * (count * dy[i] - sum_dy - xhat * sum_dy_xhat));
      }
    }
  }
  return g;
}

NormGrads gn_backward(const Tensor& input, int groups,
                      std::span<const float> gamma, float epsilon,
                      const Tensor& grad_out) {
  const Shape& s = input.shape();
  if (grad_out.shape() != s) throw ShapeError("gn_backward: shape mismatch");
  if (groups <= 0 || s.c % groups != 0) throw ShapeError("gn_backward: bad grouping");
  std::vector<float> mean(static_cast<std::size_t>(s.n) * groups);
  std::vector<float> var(mean.size());
  kernels::group_stats<float>(input.data(), s, groups, mean, var);

  NormGrads g;
  g.input = Tensor(s);
  std::vector<double> dgamma(s.c, 0.0), dbeta(s.c, 0.0);
  const int per_group = s.c / groups;
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(per_group) * static_cast<double>(plane);
  for (int n = 0; n < s.n; ++n) {
    for (int grp = 0; grp < groups; ++grp) {
      const std::size_t ng = static_cast<std::size_t>(n) * groups + grp;
      const double inv = 1.0 / std::sqrt(static_cast<double>(var[ng]) + epsilon);
      const double mu = mean[ng];
      double sum_dxhat = 0.0;
      double sum_dxhat_xhat = 0.0;
      for (int c = grp * per_group; c < (grp + 1) * per_group; ++c) {
        const auto x = input.plane(n, c);
        const auto dy = grad_out.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (x[i] - mu) * inv;
          const double dxhat = static_cast<double>(dy[i]) * gamma[c];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
          dgamma[c] += dy[i] * xhat;
          dbeta[c] += dy[i];
        }
      }
      for (int c = grp * per_group; c < (grp + 1) * per_group; ++c) {
        const auto x = input.plane(n, c);
        const auto dy = grad_out.plane(n, c);
        auto dx = g.input.mutable_plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (x[i] - mu) * inv;
          const double dxhat = static_cast<double>(dy[i]) * gamma[c];
          dx[i] = static_cast<float>(inv / count *
                                     (count * dxhat - sum_dxhat - xhat * sum_dxhat_xhat));
        }
      }
    }
  }
  g.gamma.assign(dgamma.begin(), dgamma.end());
  g.beta.assign(dbeta.begin(), dbeta.end());
  return g;
}

Tensor softmax_xent_backward(const Tensor& probs, std::span<const int> labels) {
  const int k = static_cast<int>(probs.shape().sample());
  Tensor g(probs.shape());
  const float inv = 1.0f / static_cast<float>(probs.n());
  for (int n = 0; n < probs.n(); ++n) {
    for (int j = 0; j < k; ++j) {
      const std::size_t i = static_cast<std::size_t>(n) * k + j;
      g[i] = (probs[i] - (j == labels[n] ? 1.0f : 0.0f)) * inv;
    }
  }
  return g;
}

}  // namespace bnrect
