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

#include "bnrect/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bnrect/backward.h"
#include "bnrect/errors.h"
#include "bnrect/ops.h"
#include "bnrect/rng.h"
#include "io_util.h"

namespace bnrect {
namespace {

struct LayerRecord {
  Tensor input;
  BatchStats batch;  // BN layers only
};

// Corrupt and re-quantize to the 8-bit grid, matching what the evaluation
// sets contain.
Tensor augment_batch(const Tensor& x, std::span<const std::size_t> indices,
                     const CorruptionSpec& spec, int epoch,
                     const SeverityTable& table) {
  std::vector<float> data(x.size());
  const std::size_t len = x.shape().sample();
  for (int k = 0; k < x.n(); ++k) {
    CorruptionSpec per_image = spec;
    per_image.seed = image_seed(spec, indices[k]);
    const Tensor out = apply_corruption(x.slice_batch(k, 1), per_image,
                                        static_cast<std::uint64_t>(epoch) + 1, table);
    for (std::size_t i = 0; i < len; ++i) {
      data[k * len + i] = static_cast<float>(quantize_pixel(out[i])) / 255.0f;
    }
  }
  return Tensor(x.shape(), std::move(data));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw SemanticError("epochs must be >= 1");
  if (batch_size < 2) throw SemanticError("batch size must be >= 2");
  if (!(learning_rate >= 0.0f)) throw SemanticError("learning rate must be >= 0");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw SemanticError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0f)) throw SemanticError("weight decay must be >= 0");
}

std::string TrainConfig::describe() const {
  std::ostringstream os;
  os << "epochs=" << epochs << ";batch=" << batch_size
     << ";lr=" << io::format_float(learning_rate)
     << ";momentum=" << io::format_float(momentum)
     << ";weight_decay=" << io::format_float(weight_decay) << ";seed=" << seed;
  if (augmentation) {
    os << ";augment=" << to_string(augmentation->kind) << ':' << augmentation->severity;
  }
  return os.str();
}

GradientResult compute_gradients(const ModelGraph& model, const Tensor& x,
                                 std::span<const int> labels) {
  const auto& layers = model.layers();
  std::vector<LayerRecord> records(layers.size());
  GradientResult out{0.0, 0, {}, {}, model};

  Tensor cur = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    records[i].input = cur;
    if (const auto* bn = std::get_if<BatchNormLayer>(&layers[i])) {
      BnTrainResult r = bn_forward_train(cur, bn->state);
      std::get<BatchNormLayer>(out.updated.mutable_layer(i)).state = std::move(r.state);
      records[i].batch = std::move(r.batch);
      cur = std::move(r.y);
    } else {
      ForwardOptions single;
      cur = std::visit(
          [&](const auto& l) -> Tensor {
            using L = std::remove_cvref_t<decltype(l)>;
            if constexpr (std::is_same_v<L, ConvLayer>) {
              return conv2d(cur, l.weight, l.bias, l.stride, l.padding);
            } else if constexpr (std::is_same_v<L, GroupNormLayer>) {
              return gn_forward(cur, l.groups, l.gamma, l.beta, l.epsilon);
            } else if constexpr (std::is_same_v<L, InstanceNormLayer>) {
              return in_forward(cur, l.gamma, l.beta, l.epsilon);
            } else if constexpr (std::is_same_v<L, ReluLayer>) {
              return relu(cur);
            } else if constexpr (std::is_same_v<L, AvgPoolLayer>) {
              return avgpool2d(cur, l.kernel);
            } else if constexpr (std::is_same_v<L, GlobalAvgPoolLayer>) {
              return global_avg_pool(cur);
            } else if constexpr (std::is_same_v<L, DenseLayer>) {
              return dense(cur, l.weight, l.bias);
            } else {
              return cur;
            }
          },
          layers[i]);
    }
  }
  const XentResult xent = softmax_xent(cur, labels);
  out.loss = xent.loss;
  const std::vector<int> pred = argmax_rows(cur);
  for (std::size_t n = 0; n < pred.size(); ++n) out.correct += pred[n] == labels[n] ? 1 : 0;

  // Per-layer gradients, collected back to front.
  std::vector<std::vector<std::vector<float>>> per_layer(layers.size());
  Tensor grad = softmax_xent_backward(xent.probs, labels);
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Tensor& in = records[i].input;
    const bool need_input = i > 0;
    std::visit(
        [&](const auto& l) {
          using L = std::remove_cvref_t<decltype(l)>;
          if constexpr (std::is_same_v<L, ConvLayer>) {
            Conv2dGrads g = conv2d_backward(in, l.weight, !l.bias.empty(), l.stride,
                                            l.padding, grad, need_input);
            per_layer[i].push_back(g.weight.vec());
            if (!l.bias.empty()) per_layer[i].push_back(std::move(g.bias));
            grad = std::move(g.input);
          } else if constexpr (std::is_same_v<L, BatchNormLayer>) {
            NormGrads g = bn_backward(in, records[i].batch.mean, records[i].batch.variance,
                                      l.state.gamma, l.state.epsilon, grad);
            per_layer[i].push_back(std::move(g.gamma));
            per_layer[i].push_back(std::move(g.beta));
            grad = std::move(g.input);
          } else if constexpr (std::is_same_v<L, GroupNormLayer>) {
            NormGrads g = gn_backward(in, l.groups, l.gamma, l.epsilon, grad);
            per_layer[i].push_back(std::move(g.gamma));
            per_layer[i].push_back(std::move(g.beta));
            grad = std::move(g.input);
          } else if constexpr (std::is_same_v<L, InstanceNormLayer>) {
            NormGrads g = gn_backward(in, in.c(), l.gamma, l.epsilon, grad);
            per_layer[i].push_back(std::move(g.gamma));
            per_layer[i].push_back(std::move(g.beta));
            grad = std::move(g.input);
          } else if constexpr (std::is_same_v<L, ReluLayer>) {
            grad = relu_backward(in, grad);
          } else if constexpr (std::is_same_v<L, AvgPoolLayer>) {
            grad = avgpool2d_backward(grad, in.shape(), l.kernel);
          } else if constexpr (std::is_same_v<L, GlobalAvgPoolLayer>) {
            grad = global_avg_pool_backward(grad, in.shape());
          } else if constexpr (std::is_same_v<L, DenseLayer>) {
            DenseGrads g = dense_backward(in, l.weight, grad);
            per_layer[i].push_back(g.weight.vec());
            per_layer[i].push_back(std::move(g.bias));
            grad = std::move(g.input);
          }
        },
        layers[i]);
  }
  for (auto& layer_grads : per_layer) {
    for (auto& g : layer_grads) out.grads.push_back(std::move(g));
  }
  model.visit_parameters([&](const ParamInfo& info, std::span<const float>) {
    if (info.trainable) out.names.push_back(info.name);
  });
  return out;
}

TrainResult train(const ModelGraph& initial, const RawDataset& data,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  data.validate();
  if (data.shape != initial.input_shape()) {
    throw ShapeError("training images do not match the model input shape");
  }
  if (max_label(data) >= initial.num_classes()) {
    throw SemanticError("training label " + std::to_string(max_label(data)) +
                        " outside [0, " + std::to_string(initial.num_classes()) + ")");
  }
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps = data.size() / batch;
  if (steps == 0) throw SemanticError("dataset smaller than one minibatch");
  const SeverityTable& table =
      options.severity_table ? *options.severity_table : SeverityTable::defaults();

  TrainResult result{initial, {}};
  ModelGraph& model = result.model;
  std::vector<std::vector<float>> velocity;
  model.visit_parameters([&](const ParamInfo& info, std::span<const float> p) {
    if (info.trainable) velocity.emplace_back(p.size(), 0.0f);
  });

  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle(config.seed, mix64({0x5348u, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::span<const std::size_t> idx(order.data() + step * batch, batch);
      Tensor x = to_tensor(data, idx);
      if (config.augmentation) x = augment_batch(x, idx, *config.augmentation, epoch, table);
      const std::vector<int> labels = labels_of(data, idx);
      GradientResult g = compute_gradients(model, x, labels);
      if (!std::isfinite(g.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                           " step " + std::to_string(step + 1));
      }
      loss_sum += g.loss;
      correct += static_cast<std::size_t>(g.correct);
      model = std::move(g.updated);
      std::size_t slot = 0;
      model.visit_parameters([&](const ParamInfo& info, std::span<float> p) {
        if (!info.trainable) return;
        std::vector<float>& v = velocity[slot];
        const std::vector<float>& grad = g.grads[slot];
        const float decay = info.role == ParamRole::kWeight ? config.weight_decay : 0.0f;
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = config.momentum * v[i] + (grad[i] + decay * p[i]);
          p[i] -= config.learning_rate * v[i];
        }
        ++slot;
      });
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = loss_sum / static_cast<double>(steps);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(steps * batch);
    if (options.eval_set != nullptr) {
      std::size_t hits = 0;
      const RawDataset& ev = *options.eval_set;
      for (std::size_t b = 0; b < ev.size(); b += 200) {
        const std::size_t count = std::min<std::size_t>(200, ev.size() - b);
        const std::vector<int> pred = argmax_rows(predict(model, to_tensor(ev, b, count)));
        for (std::size_t k = 0; k < count; ++k) hits += pred[k] == ev.labels[b + k] ? 1 : 0;
      }
      rec.eval_accuracy = static_cast<double>(hits) / static_cast<double>(ev.size());
    }
    result.trace.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  model.mutable_metadata().notes["train"] = config.describe();
  return result;
}

void write_trace_csv(const std::vector<EpochRecord>& trace,
                     const std::filesystem::path& path) {
  std::ostringstream os;
  os << "epoch,loss,train_acc,eval_acc\n";
  for (const EpochRecord& r : trace) {
    os << r.epoch << ',' << io::format_double(r.loss) << ','
       << io::format_double(r.train_accuracy) << ',';
    if (r.eval_accuracy) os << io::format_double(*r.eval_accuracy);
    os << '\n';
  }
  io::write_file(path, os.str());
}

}  // namespace bnrect
