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

#include <algorithm>
#include <cmath>
#include <variant>

#include "bnrect/errors.h"
#include "bnrect/trainer.h"
#include "kernels.h"

namespace bnrect {
namespace {

using DParams = std::vector<std::vector<double>>;

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

// Double-precision train-mode forward of one layer.
TensorD layer_forward(const Layer& layer, const DParams& p, const TensorD& x) {
  const Shape& s = x.shape();
  return std::visit(
      [&](const auto& l) -> TensorD {
        using L = std::remove_cvref_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ConvLayer>) {
          const int oh = kernels::conv_out_extent(s.h, l.kernel, l.stride, l.padding);
          const int ow = kernels::conv_out_extent(s.w, l.kernel, l.stride, l.padding);
          TensorD y(Shape{s.n, l.out_channels, oh, ow});
          const std::span<const double> bias =
              l.bias.empty() ? std::span<const double>() : std::span<const double>(p[1]);
          kernels::conv2d_forward<double>(x.data(), s, p[0], l.out_channels, l.kernel, bias,
                                          l.stride, l.padding, y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, BatchNormLayer>) {
          std::vector<double> mean(s.c), var(s.c);
          kernels::channel_stats<double>(x.data(), s, mean, var);
          TensorD y(s);
          kernels::normalize_channels<double>(x.data(), s, mean, var, p[0], p[1],
                                              l.state.epsilon, y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, GroupNormLayer>) {
          std::vector<double> mean(static_cast<std::size_t>(s.n) * l.groups);
          std::vector<double> var(mean.size());
          kernels::group_stats<double>(x.data(), s, l.groups, mean, var);
          TensorD y(s);
          kernels::normalize_groups<double>(x.data(), s, l.groups, mean, var, p[0], p[1],
                                            l.epsilon, y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, InstanceNormLayer>) {
          std::vector<double> mean(static_cast<std::size_t>(s.n) * s.c);
          std::vector<double> var(mean.size());
          kernels::instance_stats<double>(x.data(), s, mean, var);
          TensorD y(s);
          kernels::normalize_instances<double>(x.data(), s, mean, var, p[0], p[1],
                                               l.epsilon, y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, ReluLayer>) {
          TensorD y(s);
          kernels::relu_forward<double>(x.data(), y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, AvgPoolLayer>) {
          TensorD y(Shape{s.n, s.c, s.h / l.kernel, s.w / l.kernel});
          kernels::avgpool_forward<double>(x.data(), s, l.kernel, y.mutable_data());
          return y;
        } else if constexpr (std::is_same_v<L, GlobalAvgPoolLayer>) {
          TensorD y(Shape{s.n, s.c, 1, 1});
          kernels::global_avg_pool_forward<double>(x.data(), s, y.mutable_data());
          return y;
        } else {
          static_assert(std::is_same_v<L, DenseLayer>);
          TensorD y(Shape{s.n, l.out_features, 1, 1});
          kernels::dense_forward<double>(x.data(), s.n, l.in_features, p[0], p[1],
                                         l.out_features, y.mutable_data());
          return y;
        }
      },
      layer);
}

struct DoubleNet {
  const ModelGraph& model;
  std::vector<DParams> params;   // trainable arrays per layer
  std::vector<TensorD> inputs;   // cached base activations per layer input
  std::span<const int> labels;

  // Loss when recomputing from layer `start`. Sets `kink` when any ReLU
  // input changes sign relative to the cached base pass.
  double loss_from(std::size_t start, bool& kink) const {
    const auto& layers = model.layers();
    TensorD cur = inputs[start];
    for (std::size_t i = start; i < layers.size(); ++i) {
      if (i > start && std::holds_alternative<ReluLayer>(layers[i])) {
        const auto base = inputs[i].data();
        const auto now = cur.data();
        for (std::size_t k = 0; k < now.size(); ++k) {
          if ((base[k] > 0.0) != (now[k] > 0.0)) {
            kink = true;
            break;
          }
        }
      }
      cur = layer_forward(layers[i], params[i], cur);
    }
    const Shape& s = cur.shape();
    std::vector<double> probs(cur.size());
    return kernels::softmax_xent<double>(cur.data(), s.n, s.c, labels, probs);
  }
};

}  // namespace

GradCheckReport grad_check(const ModelGraph& model, const Tensor& x,
                           std::span<const int> labels, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw SemanticError("grad_check step must be positive");
  const GradientResult analytic = compute_gradients(model, x, labels);

  struct Slot {
    std::size_t layer;
    std::size_t local;
    std::string name;
  };
  std::vector<Slot> slots;
  DoubleNet net{model, std::vector<DParams>(model.layers().size()), {}, labels};
  model.visit_parameters([&](const ParamInfo& info, std::span<const float> p) {
    if (!info.trainable) return;
    auto& lp = net.params[info.layer_index];
    slots.push_back({info.layer_index, lp.size(), info.name});
    lp.push_back(widen(p));
  });

  net.inputs.push_back(tensor_cast<double>(x));
  for (std::size_t i = 0; i + 1 < model.layers().size(); ++i) {
    net.inputs.push_back(layer_forward(model.layers()[i], net.params[i], net.inputs[i]));
  }

  std::vector<GradCheckEntry> entries;
  GradCheckReport report;
  report.tolerance = options.tolerance;
  double max_numeric = 0.0;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    std::vector<double>& arr = net.params[slots[s].layer][slots[s].local];
    std::size_t stride = 1;
    if (options.max_entries_per_param > 0 && arr.size() > options.max_entries_per_param) {
      stride = (arr.size() + options.max_entries_per_param - 1) / options.max_entries_per_param;
    }
    for (std::size_t k = 0; k < arr.size(); k += stride) {
      const double orig = arr[k];
      bool kink = false;
      arr[k] = orig + options.step;
      const double up = net.loss_from(slots[s].layer, kink);
      arr[k] = orig - options.step;
      const double down = net.loss_from(slots[s].layer, kink);
      arr[k] = orig;
      if (kink) {
        ++report.skipped_kinks;
        continue;
      }
      GradCheckEntry e;
      e.param = slots[s].name;
      e.index = k;
      e.analytic = analytic.grads[s][k];
      e.numeric = (up - down) / (2.0 * options.step);
      max_numeric = std::max(max_numeric, std::abs(e.numeric));
      entries.push_back(e);
    }
  }
  const double floor = std::max(1e-3 * max_numeric, 1e-12);
  for (GradCheckEntry& e : entries) {
    const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), floor});
    e.rel_error = std::abs(e.analytic - e.numeric) / denom;
    if (e.rel_error >= report.max_rel_error) {
      report.max_rel_error = e.rel_error;
      report.worst = e;
    }
    if (e.rel_error > options.tolerance) report.failures.push_back(e);
  }
  report.checked = entries.size();
  return report;
}

}  // namespace bnrect
