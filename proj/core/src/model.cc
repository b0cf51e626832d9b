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

#include "bnrect/model.h"

#include <cmath>
#include <cstring>
#include <set>

#include "bnrect/errors.h"
#include "bnrect/ops.h"
#include "bnrect/rng.h"

namespace bnrect {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string shape_str(const ImageShape& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

Shape vec_shape(std::size_t len) { return Shape{static_cast<int>(len), 1, 1, 1}; }

// Output extents of `layer` applied to `in`; throws when they do not compose.
ImageShape propagate(const Layer& layer, const ImageShape& in) {
  return std::visit(
      Overloaded{
          [&](const ConvLayer& l) {
            if (l.in_channels != in.c) {
              throw ShapeError("layer " + l.name + " expects " +
                               std::to_string(l.in_channels) +
                               " channels, got " + shape_str(in));
            }
            if (l.weight.shape() !=
                Shape{l.out_channels, l.in_channels, l.kernel, l.kernel}) {
              throw ShapeError("layer " + l.name + " weight shape " +
                               l.weight.shape().str());
            }
            if (!l.bias.empty() && l.bias.size() != static_cast<std::size_t>(l.out_channels)) {
              throw ShapeError("layer " + l.name + " bias length mismatch");
            }
            if (l.stride <= 0 || l.padding < 0 || in.h + 2 * l.padding < l.kernel ||
                in.w + 2 * l.padding < l.kernel) {
              throw ShapeError("layer " + l.name + " kernel does not fit " +
                               shape_str(in));
            }
            return ImageShape{l.out_channels,
                              (in.h + 2 * l.padding - l.kernel) / l.stride + 1,
                              (in.w + 2 * l.padding - l.kernel) / l.stride + 1};
          },
          [&](const BatchNormLayer& l) {
            l.state.validate();
            if (l.state.channels() != in.c) {
              throw ShapeError("layer " + l.name + " has " +
                               std::to_string(l.state.channels()) +
                               " channels, input " + shape_str(in));
            }
            return in;
          },
          [&](const GroupNormLayer& l) {
            if (l.gamma.size() != static_cast<std::size_t>(in.c) ||
                l.beta.size() != l.gamma.size()) {
              throw ShapeError("layer " + l.name + " parameter length mismatch");
            }
            if (l.groups <= 0 || in.c % l.groups != 0) {
              throw ShapeError("layer " + l.name + ": " + std::to_string(in.c) +
                               " channels not divisible into " +
                               std::to_string(l.groups) + " groups");
            }
            return in;
          },
          [&](const InstanceNormLayer& l) {
            if (l.gamma.size() != static_cast<std::size_t>(in.c) ||
                l.beta.size() != l.gamma.size()) {
              throw ShapeError("layer " + l.name + " parameter length mismatch");
            }
            return in;
          },
          [&](const ReluLayer&) { return in; },
          [&](const AvgPoolLayer& l) {
            if (l.kernel <= 0 || in.h < l.kernel || in.w < l.kernel) {
              throw ShapeError("layer " + l.name + " window does not fit " +
                               shape_str(in));
            }
            return ImageShape{in.c, in.h / l.kernel, in.w / l.kernel};
          },
          [&](const GlobalAvgPoolLayer&) { return ImageShape{in.c, 1, 1}; },
          [&](const DenseLayer& l) {
            if (l.in_features != in.c * in.h * in.w) {
              throw ShapeError("layer " + l.name + " expects " +
                               std::to_string(l.in_features) + " features, got " +
                               shape_str(in));
            }
            if (l.weight.shape() != Shape{l.out_features, l.in_features, 1, 1} ||
                l.bias.size() != static_cast<std::size_t>(l.out_features)) {
              throw ShapeError("layer " + l.name + " parameter shape mismatch");
            }
            return ImageShape{l.out_features, 1, 1};
          },
      },
      layer);
}

std::span<const float> as_span(const Tensor& t) { return t.data(); }
std::span<float> as_span(Tensor& t) { return t.mutable_data(); }
std::span<const float> as_span(const std::vector<float>& v) { return v; }
std::span<float> as_span(std::vector<float>& v) { return v; }

// Layer is `Layer` or `const Layer`; fn receives spans of matching constness.
template <typename L, typename Fn>
void visit_layer_params(L& layer, std::size_t index, Fn&& fn) {
  const std::string& name = layer_name(layer);
  auto emit = [&](ParamRole role, bool trainable, Shape shape, auto&& data) {
    fn(ParamInfo{name + "." + std::string(to_string(role)), index, role,
                 trainable, shape},
       as_span(data));
  };
  std::visit(
      [&](auto& l) {
        using T = std::remove_cvref_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ConvLayer>) {
          emit(ParamRole::kWeight, true, l.weight.shape(), l.weight);
          if (!l.bias.empty()) {
            emit(ParamRole::kBias, true, vec_shape(l.bias.size()), l.bias);
          }
        } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
          const Shape s = vec_shape(l.state.gamma.size());
          emit(ParamRole::kGamma, true, s, l.state.gamma);
          emit(ParamRole::kBeta, true, s, l.state.beta);
          emit(ParamRole::kPopMean, false, s, l.state.pop_mean);
          emit(ParamRole::kPopVar, false, s, l.state.pop_var);
        } else if constexpr (std::is_same_v<T, GroupNormLayer> ||
                             std::is_same_v<T, InstanceNormLayer>) {
          const Shape s = vec_shape(l.gamma.size());
          emit(ParamRole::kGamma, true, s, l.gamma);
          emit(ParamRole::kBeta, true, s, l.beta);
        } else if constexpr (std::is_same_v<T, DenseLayer>) {
          emit(ParamRole::kWeight, true, l.weight.shape(), l.weight);
          emit(ParamRole::kBias, true, vec_shape(l.bias.size()), l.bias);
        }
      },
      layer);
}

std::uint64_t fnv1a(std::uint64_t h, std::span<const float> data) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < data.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

const std::string& layer_name(const Layer& layer) {
  return std::visit([](const auto& l) -> const std::string& { return l.name; },
                    layer);
}

std::string_view layer_kind(const Layer& layer) {
  return std::visit(
      Overloaded{
          [](const ConvLayer&) { return std::string_view("conv"); },
          [](const BatchNormLayer&) { return std::string_view("bn"); },
          [](const GroupNormLayer&) { return std::string_view("gn"); },
          [](const InstanceNormLayer&) { return std::string_view("in"); },
          [](const ReluLayer&) { return std::string_view("relu"); },
          [](const AvgPoolLayer&) { return std::string_view("avgpool"); },
          [](const GlobalAvgPoolLayer&) { return std::string_view("gap"); },
          [](const DenseLayer&) { return std::string_view("dense"); },
      },
      layer);
}

std::string_view to_string(NormFlavor flavor) {
  switch (flavor) {
    case NormFlavor::kBatch: return "bn";
    case NormFlavor::kGroup: return "gn";
    case NormFlavor::kInstance: return "in";
  }
  return "bn";
}

NormFlavor parse_norm_flavor(std::string_view text) {
  if (text == "bn") return NormFlavor::kBatch;
  if (text == "gn") return NormFlavor::kGroup;
  if (text == "in") return NormFlavor::kInstance;
  throw SemanticError("unknown normalization flavor '" + std::string(text) + "'");
}

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::kWeight: return "weight";
    case ParamRole::kBias: return "bias";
    case ParamRole::kGamma: return "gamma";
    case ParamRole::kBeta: return "beta";
    case ParamRole::kPopMean: return "pop_mean";
    case ParamRole::kPopVar: return "pop_var";
  }
  return "weight";
}

ModelGraph::ModelGraph(ImageShape input, int num_classes, NormFlavor flavor,
                       ModelMetadata metadata, std::vector<Layer> layers)
    : input_(input),
      num_classes_(num_classes),
      flavor_(flavor),
      metadata_(std::move(metadata)),
      layers_(std::move(layers)) {
  if (input_.c <= 0 || input_.h <= 0 || input_.w <= 0) {
    throw ShapeError("model input shape " + shape_str(input_) + " is empty");
  }
  if (num_classes_ < 1) throw SemanticError("model needs at least one class");
  if (layers_.empty()) throw SemanticError("model has no layers");
  std::set<std::string, std::less<>> names;
  ImageShape cur = input_;
  int bn_count = 0;
  for (const Layer& layer : layers_) {
    const std::string& name = layer_name(layer);
    if (name.empty() || name == kInputTap) {
      throw SemanticError("invalid layer name '" + name + "'");
    }
    if (!names.insert(name).second) {
      throw SemanticError("duplicate layer name '" + name + "'");
    }
    if (std::holds_alternative<BatchNormLayer>(layer)) ++bn_count;
    cur = propagate(layer, cur);
    shapes_.push_back(cur);
  }
  if (!std::holds_alternative<DenseLayer>(layers_.back())) {
    throw SemanticError("model must end in a dense layer");
  }
  if (cur.c != num_classes_) {
    throw ShapeError("model emits " + std::to_string(cur.c) + " logits for " +
                     std::to_string(num_classes_) + " classes");
  }
  if (flavor_ == NormFlavor::kBatch && bn_count < 1) {
    throw SemanticError("bn-flavored model has no BN layer");
  }
}

int ModelGraph::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layer_name(layers_[i]) == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> ModelGraph::bn_layer_names() const {
  std::vector<std::string> out;
  for (const Layer& layer : layers_) {
    if (std::holds_alternative<BatchNormLayer>(layer)) out.push_back(layer_name(layer));
  }
  return out;
}

const BatchNormLayer& ModelGraph::batch_norm(std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw SemanticError("no layer named '" + std::string(name) + "'");
  const auto* bn = std::get_if<BatchNormLayer>(&layers_[i]);
  if (bn == nullptr) {
    throw SemanticError("layer '" + std::string(name) + "' is not a BN layer");
  }
  return *bn;
}

BatchNormLayer& ModelGraph::mutable_batch_norm(std::string_view name) {
  return const_cast<BatchNormLayer&>(std::as_const(*this).batch_norm(name));
}

std::size_t ModelGraph::parameter_count(bool trainable_only) const {
  std::size_t total = 0;
  visit_parameters([&](const ParamInfo& info, std::span<const float> data) {
    if (info.trainable || !trainable_only) total += data.size();
  });
  return total;
}

void ModelGraph::visit_parameters(
    const std::function<void(const ParamInfo&, std::span<const float>)>& fn) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    visit_layer_params(layers_[i], i, fn);
  }
}

void ModelGraph::visit_parameters(
    const std::function<void(const ParamInfo&, std::span<float>)>& fn) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    visit_layer_params(layers_[i], i, fn);
  }
}

std::uint64_t ModelGraph::fingerprint() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  visit_parameters([&](const ParamInfo&, std::span<const float> d) { h = fnv1a(h, d); });
  return h;
}

std::uint64_t ModelGraph::weights_fingerprint() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  visit_parameters([&](const ParamInfo& info, std::span<const float> d) {
    if (info.trainable) h = fnv1a(h, d);
  });
  return h;
}

ForwardResult forward(const ModelGraph& model, const Tensor& x,
                      const ForwardOptions& options) {
  const ImageShape& in = model.input_shape();
  if (x.n() < 1 || x.c() != in.c || x.h() != in.h || x.w() != in.w) {
    throw ShapeError("forward: input " + x.shape().str() +
                     " does not match model input " + shape_str(in));
  }
  for (const std::string& tap : options.taps) {
    if (tap != kInputTap && model.index_of(tap) < 0) {
      throw SemanticError("forward: unknown tap layer '" + tap + "'");
    }
  }
  if (options.mode != ForwardMode::kAdapt && !options.adapt.empty()) {
    throw SemanticError("forward: adaptation targets given outside adapt mode");
  }
  for (const auto& [name, comps] : options.adapt) {
    model.batch_norm(name);  // throws for unknown or non-BN layers
  }

  ForwardResult result;
  if (options.mode != ForwardMode::kEval) result.model = model;
  std::vector<std::optional<Tensor>> captured(options.taps.size());
  auto capture = [&](std::string_view name, const Tensor& t) {
    for (std::size_t k = 0; k < options.taps.size(); ++k) {
      if (options.taps[k] == name) captured[k] = t;
    }
  };
  capture(kInputTap, x);

  Tensor cur = x;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    cur = std::visit(
        Overloaded{
            [&](const ConvLayer& l) {
              return conv2d(cur, l.weight, l.bias, l.stride, l.padding);
            },
            [&](const BatchNormLayer& l) {
              switch (options.mode) {
                case ForwardMode::kEval:
                  return bn_forward_eval(cur, l.state);
                case ForwardMode::kTrain: {
                  BnTrainResult r = bn_forward_train(cur, l.state);
                  std::get<BatchNormLayer>(result.model->mutable_layer(i)).state =
                      std::move(r.state);
                  return std::move(r.y);
                }
                case ForwardMode::kAdapt: {
                  const auto it = options.adapt.find(l.name);
                  const StatComponents comps =
                      it == options.adapt.end() ? StatComponents::kNone : it->second;
                  if (comps == StatComponents::kNone) return bn_forward_eval(cur, l.state);
                  const BatchStats batch = compute_batch_stats(cur);
                  const bool take_mean =
                      comps == StatComponents::kMean || comps == StatComponents::kBoth;
                  const bool take_var =
                      comps == StatComponents::kVariance || comps == StatComponents::kBoth;
                  BNState next = l.state;
                  if (take_mean) next.pop_mean = batch.mean;
                  if (take_var) next.pop_var = batch.variance;
                  Tensor y = bn_forward_eval(cur, next);
                  std::get<BatchNormLayer>(result.model->mutable_layer(i)).state =
                      std::move(next);
                  return y;
                }
              }
              return bn_forward_eval(cur, l.state);
            },
            [&](const GroupNormLayer& l) {
              return gn_forward(cur, l.groups, l.gamma, l.beta, l.epsilon);
            },
            [&](const InstanceNormLayer& l) {
              return in_forward(cur, l.gamma, l.beta, l.epsilon);
            },
            [&](const ReluLayer&) { return relu(cur); },
            [&](const AvgPoolLayer& l) { return avgpool2d(cur, l.kernel); },
            [&](const GlobalAvgPoolLayer&) { return global_avg_pool(cur); },
            [&](const DenseLayer& l) { return dense(cur, l.weight, l.bias); },
        },
        layer);
    capture(layer_name(layer), cur);
  }
  result.logits = std::move(cur);
  for (std::size_t k = 0; k < options.taps.size(); ++k) {
    result.taps.push_back(FeatureTap{options.taps[k], std::move(*captured[k])});
  }
  return result;
}

Tensor predict(const ModelGraph& model, const Tensor& x) {
  return forward(model, x).logits;
}

std::string input_tap_for(const ModelGraph& model, std::string_view name) {
  const int i = model.index_of(name);
  if (i < 0) throw SemanticError("no layer named '" + std::string(name) + "'");
  if (i == 0) return std::string(kInputTap);
  return layer_name(model.layers()[i - 1]);
}

ModelBuilder::ModelBuilder(ImageShape input, int num_classes, std::uint64_t seed)
    : input_(input), shape_(input), num_classes_(num_classes) {
  metadata_.seed = seed;
}

namespace {

void he_normal(std::span<float> w, int fan_in, RngStream& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (float& v : w) v = static_cast<float>(rng.normal() * stddev);
}

}  // namespace

ModelBuilder& ModelBuilder::conv(std::string name, int out_channels, int kernel,
                                 int stride, int padding, bool bias) {
  ConvLayer l;
  l.name = std::move(name);
  l.in_channels = shape_.c;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.weight = Tensor(Shape{out_channels, shape_.c, kernel, kernel});
  RngStream rng(metadata_.seed, mix64({layers_.size(), 0xC0u}));
  he_normal(l.weight.mutable_data(), shape_.c * kernel * kernel, rng);
  if (bias) l.bias.assign(out_channels, 0.0f);
  shape_ = propagate(l, shape_);
  layers_.emplace_back(std::move(l));
  return *this;
}

ModelBuilder& ModelBuilder::batch_norm(std::string name) {
  layers_.emplace_back(BatchNormLayer{
      std::move(name),
      BNState::fresh(shape_.c, metadata_.epsilon, metadata_.momentum)});
  return *this;
}

ModelBuilder& ModelBuilder::group_norm(std::string name, int groups) {
  GroupNormLayer l{std::move(name), groups, std::vector<float>(shape_.c, 1.0f),
                   std::vector<float>(shape_.c, 0.0f), metadata_.epsilon};
  propagate(l, shape_);
  layers_.emplace_back(std::move(l));
  return *this;
}

ModelBuilder& ModelBuilder::instance_norm(std::string name) {
  layers_.emplace_back(InstanceNormLayer{std::move(name),
                                         std::vector<float>(shape_.c, 1.0f),
                                         std::vector<float>(shape_.c, 0.0f),
                                         metadata_.epsilon});
  return *this;
}

ModelBuilder& ModelBuilder::relu(std::string name) {
  layers_.emplace_back(ReluLayer{std::move(name)});
  return *this;
}

ModelBuilder& ModelBuilder::avgpool(std::string name, int kernel) {
  AvgPoolLayer l{std::move(name), kernel};
  shape_ = propagate(l, shape_);
  layers_.emplace_back(std::move(l));
  return *this;
}

ModelBuilder& ModelBuilder::global_avg_pool(std::string name) {
  shape_ = ImageShape{shape_.c, 1, 1};
  layers_.emplace_back(GlobalAvgPoolLayer{std::move(name)});
  return *this;
}

ModelBuilder& ModelBuilder::dense(std::string name, int out_features) {
  DenseLayer l;
  l.name = std::move(name);
  l.in_features = shape_.c * shape_.h * shape_.w;
  l.out_features = out_features;
  l.weight = Tensor(Shape{out_features, l.in_features, 1, 1});
  RngStream rng(metadata_.seed, mix64({layers_.size(), 0xDEu}));
  he_normal(l.weight.mutable_data(), l.in_features, rng);
  l.bias.assign(out_features, 0.0f);
  shape_ = ImageShape{out_features, 1, 1};
  layers_.emplace_back(std::move(l));
  return *this;
}

ModelBuilder& ModelBuilder::classifier(std::string name) {
  return dense(std::move(name), num_classes_);
}

ModelBuilder& ModelBuilder::epsilon(float eps) {
  metadata_.epsilon = eps;
  return *this;
}

ModelBuilder& ModelBuilder::momentum(float m) {
  metadata_.momentum = m;
  return *this;
}

ModelBuilder& ModelBuilder::preset(std::string name) {
  metadata_.preset = std::move(name);
  return *this;
}

ModelGraph ModelBuilder::build(NormFlavor flavor) const {
  return ModelGraph(input_, num_classes_, flavor, metadata_, layers_);
}

std::vector<std::string> preset_names() {
  return {"tiny-cnn-bn", "tiny-cnn-gn", "tiny-cnn-in", "ref-baseline"};
}

ModelGraph build_preset(std::string_view name, ImageShape input,
                        int num_classes, std::uint64_t seed) {
  ModelBuilder b(input, num_classes, seed);
  b.preset(std::string(name));
  auto blocks = [&](std::initializer_list<int> widths, NormFlavor flavor) {
    int i = 1;
    for (int width : widths) {
      const std::string idx = std::to_string(i++);
      b.conv("conv" + idx, width, 3, 1, 1);
      switch (flavor) {
        case NormFlavor::kBatch: b.batch_norm("bn" + idx); break;
        case NormFlavor::kGroup: b.group_norm("gn" + idx, kGroupNormGroups); break;
        case NormFlavor::kInstance: b.instance_norm("in" + idx); break;
      }
      b.relu("relu" + idx).avgpool("pool" + idx, 2);
    }
    b.global_avg_pool("gap").classifier("fc");
    return b.build(flavor);
  };
  if (name == "tiny-cnn-bn") return blocks({16, 32, 64}, NormFlavor::kBatch);
  if (name == "tiny-cnn-gn") return blocks({16, 32, 64}, NormFlavor::kGroup);
  if (name == "tiny-cnn-in") return blocks({16, 32, 64}, NormFlavor::kInstance);
  if (name == "ref-baseline") return blocks({8, 16}, NormFlavor::kBatch);
  throw SemanticError("unknown preset '" + std::string(name) + "'");
}

}  // namespace bnrect
