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

#ifndef BNRECT_ADAPTATION_H_
#define BNRECT_ADAPTATION_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bnrect/dataset.h"
#include "bnrect/model.h"

namespace bnrect {

enum class StatScope { kBoth, kMeanOnly, kVarianceOnly };
enum class LayerScope { kAll, kFront, kMiddle, kEnd, kExplicit };

std::string_view to_string(StatScope scope);
std::string_view to_string(LayerScope scope);
// Accepts both|mean|var (and mean_only, variance_only).
StatScope parse_stat_scope(std::string_view text);

inline constexpr int kDefaultSampleCount = 32;

struct AdaptationPolicy {
  StatScope stats = StatScope::kBoth;
  LayerScope layers = LayerScope::kAll;
  std::vector<std::string> explicit_layers;  // kExplicit only
  int sample_count = kDefaultSampleCount;

  // all|front|middle|end or a comma-separated list of BN layer names.
  void set_layers(std::string_view text);
  // Canonical "stats=both;layers=all;n=32".
  std::string describe() const;
  // Throws SemanticError for sample_count < 1 or an empty explicit list.
  void validate() const;
  // Non-fatal remarks (degenerate variance estimates for n < 2).
  std::vector<std::string> warnings() const;
};

struct BnPartition {
  std::vector<std::string> front;
  std::vector<std::string> middle;
  std::vector<std::string> end;
};

// BN layers in depth order split at floor(L/3) and floor(2L/3).
BnPartition partition_bn_layers(const ModelGraph& model);

// BN layers the policy touches, in depth order. Throws SemanticError for a
// model without BN layers or for a name that is not a BN layer.
std::vector<std::string> resolve_layers(const ModelGraph& model,
                                        const AdaptationPolicy& policy);

// One adapt-mode forward of `batch`: every in-scope BN layer replaces the
// selected population components with the statistics of its incoming
// activations, and normalizes the batch with the resulting statistics.
// Weights, gamma and beta are copied unchanged. Throws ShapeError when the
// batch does not match the model input or policy.sample_count.
ModelGraph rectify(const ModelGraph& model, const Tensor& batch,
                   const AdaptationPolicy& policy);

// `count` distinct indices drawn uniformly from [0, pool_size), in draw
// order. Throws SemanticError if count > pool_size.
std::vector<std::size_t> draw_without_replacement(std::size_t pool_size,
                                                  std::size_t count,
                                                  std::uint64_t seed);

// Draws policy.sample_count images from `pool` and rectifies on them.
struct PoolRectification {
  ModelGraph model;
  std::vector<std::size_t> indices;
};
PoolRectification rectify_from_pool(const ModelGraph& model, const RawDataset& pool,
                                    const AdaptationPolicy& policy, std::uint64_t seed);

}  // namespace bnrect

#endif  // BNRECT_ADAPTATION_H_
