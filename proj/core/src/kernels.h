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

// Typed forward kernels shared by the float public API and the double
// precision reference path used for gradient checking.
//
// Summation orders are fixed and documented per kernel; results are
// bit-reproducible for fixed inputs. Kernels do not validate shapes; the
// public wrappers do.

#ifndef BNRECT_SRC_KERNELS_H_
#define BNRECT_SRC_KERNELS_H_

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bnrect/tensor.h"

namespace bnrect::kernels {

inline int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// col[(ci*k + kh)*k + kw][oh*OW + ow]; out-of-bounds taps are zero.
template <typename T>
void im2col(const T* in, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w, T* col) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int ci = 0; ci < channels; ++ci) {
    const T* src = in + static_cast<std::size_t>(ci) * height * width;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = col + ((static_cast<std::size_t>(ci) * k + kh) * k + kw) * plane;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + kh;
          T* dst = row + static_cast<std::size_t>(oh) * out_w;
          if (ih < 0 || ih >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* line = src + static_cast<std::size_t>(ih) * width;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kw;
            dst[ow] = (iw >= 0 && iw < width) ? line[iw] : T(0);
          }
        }
      }
    }
  }
}

// C[i][j] += sum_k A(i, k) * B[k][j] with k ascending for every output, so
// the result does not depend on the tiling. A(i, k) = A[i * a_row + k * a_col].
template <typename T>
void gemm_acc(int M, int N, int K, const T* A, std::ptrdiff_t a_row,
              std::ptrdiff_t a_col, const T* B, std::ptrdiff_t ldb, T* C,
              std::ptrdiff_t ldc) {
  for (int i = 0; i < M; ++i) {
    T* c_row = C + i * ldc;
    for (int k = 0; k < K; ++k) {
      const T a = A[i * a_row + k * a_col];
      const T* b = B + k * ldb;
      for (int c = 0; c < N; ++c) c_row[c] += a * b[c];
    }
  }
}

#if defined(__GNUC__)
#define BNRECT_LOAD8(dst, p) std::memcpy(&(dst), (p), sizeof(dst))
#define BNRECT_STORE8(p, v) std::memcpy((p), &(v), sizeof(v))
// Register-tiled float version: 4 rows x 16 columns of accumulators held in
// vector registers, same per-output summation order as the generic loop.
template <>
inline void gemm_acc<float>(int M, int N, int K, const float* A, std::ptrdiff_t a_row,
                            std::ptrdiff_t a_col, const float* B, std::ptrdiff_t ldb,
                            float* C, std::ptrdiff_t ldc) {
  typedef float v8 __attribute__((vector_size(32)));
  int i = 0;
  for (; i + 4 <= M; i += 4) {
    float* c0 = C + i * ldc;
    float* c1 = c0 + ldc;
    float* c2 = c1 + ldc;
    float* c3 = c2 + ldc;
    const float* a0 = A + i * a_row;
    int j = 0;
    for (; j + 16 <= N; j += 16) {
      v8 x00, x01, x10, x11, x20, x21, x30, x31;
      BNRECT_LOAD8(x00, c0 + j), BNRECT_LOAD8(x01, c0 + j + 8);
      BNRECT_LOAD8(x10, c1 + j), BNRECT_LOAD8(x11, c1 + j + 8);
      BNRECT_LOAD8(x20, c2 + j), BNRECT_LOAD8(x21, c2 + j + 8);
      BNRECT_LOAD8(x30, c3 + j), BNRECT_LOAD8(x31, c3 + j + 8);
      const float* b = B + j;
      const float* a = a0;
      for (int k = 0; k < K; ++k, b += ldb, a += a_col) {
        v8 b0, b1;
        BNRECT_LOAD8(b0, b), BNRECT_LOAD8(b1, b + 8);
        const float s0 = a[0], s1 = a[a_row], s2 = a[2 * a_row], s3 = a[3 * a_row];
        x00 += s0 * b0;
        x01 += s0 * b1;
        x10 += s1 * b0;
        x11 += s1 * b1;
        x20 += s2 * b0;
        x21 += s2 * b1;
        x30 += s3 * b0;
        x31 += s3 * b1;
      }
      BNRECT_STORE8(c0 + j, x00), BNRECT_STORE8(c0 + j + 8, x01);
      BNRECT_STORE8(c1 + j, x10), BNRECT_STORE8(c1 + j + 8, x11);
      BNRECT_STORE8(c2 + j, x20), BNRECT_STORE8(c2 + j + 8, x21);
      BNRECT_STORE8(c3 + j, x30), BNRECT_STORE8(c3 + j + 8, x31);
    }
    for (; j + 8 <= N; j += 8) {
      v8 x0, x1, x2, x3;
      BNRECT_LOAD8(x0, c0 + j), BNRECT_LOAD8(x1, c1 + j);
      BNRECT_LOAD8(x2, c2 + j), BNRECT_LOAD8(x3, c3 + j);
      const float* b = B + j;
      const float* a = a0;
      for (int k = 0; k < K; ++k, b += ldb, a += a_col) {
        v8 bv;
        BNRECT_LOAD8(bv, b);
        x0 += a[0] * bv;
        x1 += a[a_row] * bv;
        x2 += a[2 * a_row] * bv;
        x3 += a[3 * a_row] * bv;
      }
      BNRECT_STORE8(c0 + j, x0), BNRECT_STORE8(c1 + j, x1);
      BNRECT_STORE8(c2 + j, x2), BNRECT_STORE8(c3 + j, x3);
    }
    for (; j < N; ++j) {
      float y0 = c0[j], y1 = c1[j], y2 = c2[j], y3 = c3[j];
      const float* a = a0;
      for (int k = 0; k < K; ++k, a += a_col) {
        const float bv = B[k * ldb + j];
        y0 += a[0] * bv;
        y1 += a[a_row] * bv;
        y2 += a[2 * a_row] * bv;
        y3 += a[3 * a_row] * bv;
      }
      c0[j] = y0, c1[j] = y1, c2[j] = y2, c3[j] = y3;
    }
  }
  for (; i < M; ++i) {
    float* c_row = C + i * ldc;
    for (int k = 0; k < K; ++k) {
      const float a = A[i * a_row + k * a_col];
      const float* b = B + k * ldb;
      for (int c = 0; c < N; ++c) c_row[c] += a * b[c];
    }
  }
}
#undef BNRECT_LOAD8
#undef BNRECT_STORE8
#endif

// Cross-correlation. Each output element is accumulated from zero in the
// order Cin (outer), kh, kw (inner); the bias is added last.
template <typename T>
void conv2d_forward(std::span<const T> input, const Shape& in_shape,
                    std::span<const T> weight, int out_channels, int k,
                    std::span<const T> bias, int stride, int pad,
                    std::span<T> output) {
  const int out_h = conv_out_extent(in_shape.h, k, stride, pad);
  const int out_w = conv_out_extent(in_shape.w, k, stride, pad);
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  const std::size_t taps = static_cast<std::size_t>(in_shape.c) * k * k;
  std::vector<T> col(taps * plane);
  for (int n = 0; n < in_shape.n; ++n) {
    im2col(input.data() + n * in_shape.sample(), in_shape.c, in_shape.h,
           in_shape.w, k, stride, pad, out_h, out_w, col.data());
    T* out_n = output.data() + static_cast<std::size_t>(n) * out_channels * plane;
    std::fill(out_n, out_n + out_channels * plane, T(0));
    gemm_acc<T>(out_channels, static_cast<int>(plane), static_cast<int>(taps),
                weight.data(), static_cast<std::ptrdiff_t>(taps), 1, col.data(),
                static_cast<std::ptrdiff_t>(plane), out_n,
                static_cast<std::ptrdiff_t>(plane));
    if (!bias.empty()) {
      for (int co = 0; co < out_channels; ++co) {
        T* o = out_n + co * plane;
        const T b = bias[co];
        for (std::size_t p = 0; p < plane; ++p) o[p] += b;
      }
    }
  }
}

template <typename T>
void relu_forward(std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// Non-overlapping k x k average pooling (stride k, floor extents). Window
// summed row-major, then multiplied by 1/(k*k).
template <typename T>
void avgpool_forward(std::span<const T> x, const Shape& s, int k,
                     std::span<T> y) {
  const int oh = s.h / k;
  const int ow = s.w / k;
  const T inv = T(1) / static_cast<T>(k * k);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      T* dst = y.data() + (static_cast<std::size_t>(n) * s.c + c) * oh * ow;
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          T acc = T(0);
          for (int a = 0; a < k; ++a) {
            const T* line = src + static_cast<std::size_t>(i * k + a) * s.w + j * k;
            for (int b = 0; b < k; ++b) acc += line[b];
          }
          dst[i * ow + j] = acc * inv;
        }
      }
    }
  }
}

// Mean over H*W, accumulated in double in row-major order.
template <typename T>
void global_avg_pool_forward(std::span<const T> x, const Shape& s,
                             std::span<T> y) {
  const std::size_t plane = s.plane();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(s.n) * s.c; ++nc) {
    double acc = 0.0;
    const T* src = x.data() + nc * plane;
    for (std::size_t p = 0; p < plane; ++p) acc += src[p];
    y[nc] = static_cast<T>(acc / static_cast<double>(plane));
  }
}

// y[n][k] = sum_d x[n][d] * w[k][d] (d ascending) + b[k].
template <typename T>
void dense_forward(std::span<const T> x, int batch, int in_features,
                   std::span<const T> weight, std::span<const T> bias,
                   int out_features, std::span<T> y) {
  for (int n = 0; n < batch; ++n) {
    const T* xr = x.data() + static_cast<std::size_t>(n) * in_features;
    for (int k = 0; k < out_features; ++k) {
      const T* wr = weight.data() + static_cast<std::size_t>(k) * in_features;
      T acc = T(0);
      for (int d = 0; d < in_features; ++d) acc += xr[d] * wr[d];
      y[static_cast<std::size_t>(n) * out_features + k] = acc + bias[k];
    }
  }
}

// Mean and biased variance per channel over (N, H, W). Two passes, double
// accumulation, traversal order n then h*w.
template <typename T>
void channel_stats(std::span<const T> x, const Shape& s, std::span<T> mean,
                   std::span<T> var) {
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(plane);
  for (int c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double m = sum / count;
    double sq = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = static_cast<double>(p[i]) - m;
        sq += d * d;
      }
    }
    mean[c] = static_cast<T>(m);
    var[c] = static_cast<T>(sq / count);
  }
}

// y = (x - mean[c]) * (gamma[c] / sqrt(var[c] + eps)) + beta[c].
template <typename T>
void normalize_channels(std::span<const T> x, const Shape& s,
                        std::span<const T> mean, std::span<const T> var,
                        std::span<const T> gamma, std::span<const T> beta,
                        T eps, std::span<T> y) {
  const std::size_t plane = s.plane();
  for (int c = 0; c < s.c; ++c) {
    const T scale = gamma[c] / std::sqrt(var[c] + eps);
    const T mu = mean[c];
    const T shift = beta[c];
    for (int n = 0; n < s.n; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        y[base + i] = (x[base + i] - mu) * scale + shift;
      }
    }
  }
}

// Per-(sample, channel) statistics over H*W. Output index n*C + c.
template <typename T>
void instance_stats(std::span<const T> x, const Shape& s, std::span<T> mean,
                    std::span<T> var) {
  const std::size_t plane = s.plane();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(s.n) * s.c; ++nc) {
    const T* p = x.data() + nc * plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    const double m = sum / static_cast<double>(plane);
    double sq = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = static_cast<double>(p[i]) - m;
      sq += d * d;
    }
    mean[nc] = static_cast<T>(m);
    var[nc] = static_cast<T>(sq / static_cast<double>(plane));
  }
}

template <typename T>
void normalize_instances(std::span<const T> x, const Shape& s,
                         std::span<const T> mean, std::span<const T> var,
                         std::span<const T> gamma, std::span<const T> beta,
                         T eps, std::span<T> y) {
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t nc = static_cast<std::size_t>(n) * s.c + c;
      const T scale = gamma[c] / std::sqrt(var[nc] + eps);
      const T mu = mean[nc];
      const T shift = beta[c];
      const std::size_t base = nc * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        y[base + i] = (x[base + i] - mu) * scale + shift;
      }
    }
  }
}

// Per-(sample, group) statistics over (C/groups channels) x H x W. Output
// index n*groups + g.
template <typename T>
void group_stats(std::span<const T> x, const Shape& s, int groups,
                 std::span<T> mean, std::span<T> var) {
  const std::size_t group_len = static_cast<std::size_t>(s.c / groups) * s.plane();
  for (std::size_t ng = 0; ng < static_cast<std::size_t>(s.n) * groups; ++ng) {
    const T* p = x.data() + ng * group_len;
    double sum = 0.0;
    for (std::size_t i = 0; i < group_len; ++i) sum += p[i];
    const double m = sum / static_cast<double>(group_len);
    double sq = 0.0;
    for (std::size_t i = 0; i < group_len; ++i) {
      const double d = static_cast<double>(p[i]) - m;
      sq += d * d;
    }
    mean[ng] = static_cast<T>(m);
    var[ng] = static_cast<T>(sq / static_cast<double>(group_len));
  }
}

template <typename T>
void normalize_groups(std::span<const T> x, const Shape& s, int groups,
                      std::span<const T> mean, std::span<const T> var,
                      std::span<const T> gamma, std::span<const T> beta, T eps,
                      std::span<T> y) {
  const int per_group = s.c / groups;
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t ng = static_cast<std::size_t>(n) * groups + c / per_group;
      const T scale = gamma[c] / std::sqrt(var[ng] + eps);
      const T mu = mean[ng];
      const T shift = beta[c];
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        y[base + i] = (x[base + i] - mu) * scale + shift;
      }
    }
  }
}

// Row-wise max-shifted softmax. Returns the mean negative log-likelihood.
template <typename T>
double softmax_xent(std::span<const T> logits, int batch, int classes,
                    std::span<const int> labels, std::span<T> probs) {
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    const T* z = logits.data() + static_cast<std::size_t>(n) * classes;
    T* p = probs.data() + static_cast<std::size_t>(n) * classes;
    double mx = z[0];
    for (int k = 1; k < classes; ++k) mx = std::max<double>(mx, z[k]);
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(static_cast<double>(z[k]) - mx);
    for (int k = 0; k < classes; ++k) {
      p[k] = static_cast<T>(std::exp(static_cast<double>(z[k]) - mx) / sum);
    }
    total += std::log(sum) - (static_cast<double>(z[labels[n]]) - mx);
  }
  return total / batch;
}

}  // namespace bnrect::kernels

#endif  // BNRECT_SRC_KERNELS_H_
