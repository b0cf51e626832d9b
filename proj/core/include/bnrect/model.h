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

#ifndef BNRECT_MODEL_H_
#define BNRECT_MODEL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bnrect/normalization.h"
#include "bnrect/tensor.h"

namespace bnrect {

struct ConvLayer {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  Tensor weight;             // [out, in, kernel, kernel]
  std::vector<float> bias;   // empty when the layer has no bias
};

struct BatchNormLayer {
  std::string name;
  BNState state;
};

struct GroupNormLayer {
  std::string name;
  int groups = 1;
  std::vector<float> gamma;
  std::vector<float> beta;
  float epsilon = kDefaultEpsilon;
};

struct InstanceNormLayer {
  std::string name;
  std::vector<float> gamma;
  std::vector<float> beta;
  float epsilon = kDefaultEpsilon;
};

struct ReluLayer {
  std::string name;
};

struct AvgPoolLayer {
  std::string name;
  int kernel = 2;
};

struct GlobalAvgPoolLayer {
  std::string name;
};

struct DenseLayer {
  std::string name;
  int in_features = 0;
  int out_features = 0;
  Tensor weight;  // [out, in, 1, 1]
  std::vector<float> bias;
};

using Layer = std::variant<ConvLayer, BatchNormLayer, GroupNormLayer,
                           InstanceNormLayer, ReluLayer, AvgPoolLayer,
                           GlobalAvgPoolLayer, DenseLayer>;

const std::string& layer_name(const Layer& layer);
// One of conv, bn, gn, in, relu, avgpool, gap, dense.
std::string_view layer_kind(const Layer& layer);

enum class NormFlavor { kBatch, kGroup, kInstance };
std::string_view to_string(NormFlavor flavor);
NormFlavor parse_norm_flavor(std::string_view text);

// Per-sample extents (C, H, W).
struct ImageShape {
  int c = 0;
  int h = 0;
  int w = 0;
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct ModelMetadata {
  std::string preset;
  float epsilon = kDefaultEpsilon;
  float momentum = kDefaultMomentum;
  std::uint64_t seed = 0;
  std::string init = "he-normal-fan-in";
  std::string rng = "philox4x32-10";
  // Free-form provenance entries (training configuration, adaptation
  // policy). Written to the manifest verbatim, keys sorted.
  std::map<std::string, std::string> notes;
};

enum class ParamRole { kWeight, kBias, kGamma, kBeta, kPopMean, kPopVar };
std::string_view to_string(ParamRole role);

struct ParamInfo {
  std::string name;        // "<layer>.<role>"
  std::size_t layer_index = 0;
  ParamRole role = ParamRole::kWeight;
  bool trainable = true;   // false for population statistics
  Shape shape;             // [len,1,1,1] for vectors
};

// A validated sequential network. Layers are stored in depth order.
class ModelGraph {
 public:
  // Validates names, shape composition, flavor consistency, and that the
  // network ends in a dense layer producing `num_classes` logits. Throws
  // SemanticError or ShapeError.
  ModelGraph(ImageShape input, int num_classes, NormFlavor flavor,
             ModelMetadata metadata, std::vector<Layer> layers);

  const ImageShape& input_shape() const { return input_; }
  int num_classes() const { return num_classes_; }
  NormFlavor flavor() const { return flavor_; }
  const ModelMetadata& metadata() const { return metadata_; }
  ModelMetadata& mutable_metadata() { return metadata_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Layer objects can be edited in place (trainer, adaptation, loaders) but
  // their extents must not change.
  Layer& mutable_layer(std::size_t index) { return layers_.at(index); }

  // Index of the named layer or -1.
  int index_of(std::string_view name) const;
  // Output extents of layer `index`.
  ImageShape output_shape(std::size_t index) const { return shapes_.at(index); }

  // BN layer names ordered by depth.
  std::vector<std::string> bn_layer_names() const;
  const BatchNormLayer& batch_norm(std::string_view name) const;
  BatchNormLayer& mutable_batch_norm(std::string_view name);

  std::size_t parameter_count(bool trainable_only = true) const;

  // Visits every parameter array in serialization order.
  void visit_parameters(
      const std::function<void(const ParamInfo&, std::span<const float>)>& fn) const;
  void visit_parameters(
      const std::function<void(const ParamInfo&, std::span<float>)>& fn);

  // FNV-1a over the raw bytes of every parameter array. The weights variant
  // skips population statistics.
  std::uint64_t fingerprint() const;
  std::uint64_t weights_fingerprint() const;

 private:
  ImageShape input_;
  int num_classes_;
  NormFlavor flavor_;
  ModelMetadata metadata_;
  std::vector<Layer> layers_;
  std::vector<ImageShape> shapes_;
};

enum class ForwardMode { kTrain, kEval, kAdapt };

// Which population statistics an adapt-mode forward replaces at a BN layer.
enum class StatComponents { kNone, kMean, kVariance, kBoth };

struct FeatureTap {
  std::string layer;
  Tensor activation;
};

// Name of the pseudo-layer whose tap is the network input itself.
inline constexpr std::string_view kInputTap = "input";

struct ForwardOptions {
  ForwardMode mode = ForwardMode::kEval;
  // Layer outputs to capture ("input" captures the network input).
  std::vector<std::string> taps;
  // kAdapt only: BN layers whose statistics are replaced. Missing layers
  // propagate with their population statistics.
  std::map<std::string, StatComponents, std::less<>> adapt;
};

struct ForwardResult {
  Tensor logits;                     // [N, K, 1, 1]
  std::vector<FeatureTap> taps;      // in request order
  std::optional<ModelGraph> model;   // updated copy for kTrain / kAdapt
};

// Train: BN normalizes with batch statistics and advances moving averages.
// Eval: BN uses population statistics; nothing changes.
// Adapt: listed BN layers normalize with (and commit) batch statistics for
// the selected components; the rest behave as in eval.
ForwardResult forward(const ModelGraph& model, const Tensor& x,
                      const ForwardOptions& options = {});

// Eval-mode logits.
Tensor predict(const ModelGraph& model, const Tensor& x);

// Name of the tap holding the input of layer `name` (the previous layer's
// output, or "input" for the first layer).
std::string input_tap_for(const ModelGraph& model, std::string_view name);

// Fluent construction of sequential networks. Weights are drawn from a
// He-style fan-in normal N(0, 2/fan_in) using one RNG stream per layer.
class ModelBuilder {
 public:
  ModelBuilder(ImageShape input, int num_classes, std::uint64_t seed);

  ModelBuilder& conv(std::string name, int out_channels, int kernel,
                     int stride, int padding, bool bias = false);
  ModelBuilder& batch_norm(std::string name);
  ModelBuilder& group_norm(std::string name, int groups);
  ModelBuilder& instance_norm(std::string name);
  ModelBuilder& relu(std::string name);
  ModelBuilder& avgpool(std::string name, int kernel);
  ModelBuilder& global_avg_pool(std::string name);
  ModelBuilder& dense(std::string name, int out_features);
  // Final classifier; out_features = num_classes.
  ModelBuilder& classifier(std::string name);

  ModelBuilder& epsilon(float eps);
  ModelBuilder& momentum(float m);
  ModelBuilder& preset(std::string name);

  ModelGraph build(NormFlavor flavor) const;

 private:
  ImageShape current() const { return shape_; }

  ImageShape input_;
  ImageShape shape_;
  int num_classes_;
  ModelMetadata metadata_;
  std::vector<Layer> layers_;
};

// tiny-cnn-bn, tiny-cnn-gn, tiny-cnn-in: three conv(3x3)->norm->relu->pool
// blocks with 16/32/64 channels, global pooling and a dense classifier.
// ref-baseline: two BN blocks with 8/16 channels.
ModelGraph build_preset(std::string_view name, ImageShape input,
                        int num_classes, std::uint64_t seed);
std::vector<std::string> preset_names();

inline constexpr int kGroupNormGroups = 4;

}  // namespace bnrect

#endif  // BNRECT_MODEL_H_
