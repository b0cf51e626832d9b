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

#include "bnrect/adaptation.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "bnrect/errors.h"
#include "bnrect/rng.h"
#include "io_util.h"

namespace bnrect {

std::string_view to_string(StatScope scope) {
  switch (scope) {
    case StatScope::kBoth: return "both";
    case StatScope::kMeanOnly: return "mean";
    case StatScope::kVarianceOnly: return "var";
  }
  return "?";
}

std::string_view to_string(LayerScope scope) {
  switch (scope) {
    case LayerScope::kAll: return "all";
    case LayerScope::kFront: return "front";
    case LayerScope::kMiddle: return "middle";
    case LayerScope::kEnd: return "end";
    case LayerScope::kExplicit: return "explicit";
  }
  return "?";
}

StatScope parse_stat_scope(std::string_view text) {
  if (text == "both") return StatScope::kBoth;
  if (text == "mean" || text == "mean_only") return StatScope::kMeanOnly;
  if (text == "var" || text == "variance" || text == "variance_only") {
    return StatScope::kVarianceOnly;
  }
  throw SemanticError("unknown statistics scope '" + std::string(text) +
                      "' (expected both, mean or var)");
}

void AdaptationPolicy::set_layers(std::string_view text) {
  explicit_layers.clear();
  if (text == "all") layers = LayerScope::kAll;
  else if (text == "front") layers = LayerScope::kFront;
  else if (text == "middle") layers = LayerScope::kMiddle;
  else if (text == "end") layers = LayerScope::kEnd;
  else {
    layers = LayerScope::kExplicit;
    for (const std::string& name : io::split(text, ',')) {
      const std::string t(io::trim(name));
      if (!t.empty()) explicit_layers.push_back(t);
    }
  }
}

std::string AdaptationPolicy::describe() const {
  std::string out = "stats=" + std::string(to_string(stats)) + ";layers=";
  if (layers == LayerScope::kExplicit) {
    for (std::size_t i = 0; i < explicit_layers.size(); ++i) {
      if (i) out += ',';
      out += explicit_layers[i];
    }
  } else {
    out += to_string(layers);
  }
  return out + ";n=" + std::to_string(sample_count);
}

void AdaptationPolicy::validate() const {
  if (sample_count < 1) throw SemanticError("sample count must be >= 1");
  if (layers == LayerScope::kExplicit && explicit_layers.empty()) {
    throw SemanticError("explicit layer scope with no layer names");
  }
}

std::vector<std::string> AdaptationPolicy::warnings() const {
  std::vector<std::string> out;
  if (sample_count < 2) {
    out.push_back("sample count " + std::to_string(sample_count) +
                  ": variance estimates at layers with small spatial extent are degenerate");
  }
  return out;
}

BnPartition partition_bn_layers(const ModelGraph& model) {
  const std::vector<std::string> names = model.bn_layer_names();
  const std::size_t n = names.size();
  const std::size_t a = n / 3;
  const std::size_t b = 2 * n / 3;
  BnPartition p;
  p.front.assign(names.begin(), names.begin() + a);
  p.middle.assign(names.begin() + a, names.begin() + b);
  p.end.assign(names.begin() + b, names.end());
  return p;
}

std::vector<std::string> resolve_layers(const ModelGraph& model,
                                        const AdaptationPolicy& policy) {
  policy.validate();
  if (model.bn_layer_names().empty()) {
    throw SemanticError("model '" + model.metadata().preset + "' uses " +
                        std::string(to_string(model.flavor())) +
                        " normalization and has no batch-norm statistics to rectify");
  }
  const BnPartition p = partition_bn_layers(model);
  switch (policy.layers) {
    case LayerScope::kAll: return model.bn_layer_names();
    case LayerScope::kFront: return p.front;
    case LayerScope::kMiddle: return p.middle;
    case LayerScope::kEnd: return p.end;
    case LayerScope::kExplicit: break;
  }
  std::set<std::string> wanted;
  for (const std::string& name : policy.explicit_layers) {
    const int idx = model.index_of(name);
    if (idx < 0) throw SemanticError("adaptation layer '" + name + "' does not exist");
    if (!std::holds_alternative<BatchNormLayer>(model.layers()[idx])) {
      throw SemanticError("adaptation layer '" + name + "' is a " +
                          std::string(layer_kind(model.layers()[idx])) +
                          " layer, not batch norm");
    }
    wanted.insert(name);
  }
  std::vector<std::string> out;
  for (const std::string& name : model.bn_layer_names()) {
    if (wanted.count(name)) out.push_back(name);
  }
  return out;
}

ModelGraph rectify(const ModelGraph& model, const Tensor& batch,
                   const AdaptationPolicy& policy) {
  const std::vector<std::string> layers = resolve_layers(model, policy);
  if (batch.n() != policy.sample_count) {
    throw ShapeError("representation batch holds " + std::to_string(batch.n()) +
                     " samples but the policy asks for " +
                     std::to_string(policy.sample_count));
  }
  StatComponents comps = StatComponents::kBoth;
  if (policy.stats == StatScope::kMeanOnly) comps = StatComponents::kMean;
  if (policy.stats == StatScope::kVarianceOnly) comps = StatComponents::kVariance;
  ForwardOptions options;
  options.mode = ForwardMode::kAdapt;
  for (const std::string& name : layers) options.adapt.emplace(name, comps);
  ForwardResult r = forward(model, batch, options);
  ModelGraph out = std::move(*r.model);
  out.mutable_metadata().notes["adapt"] = policy.describe();
  return out;
}

std::vector<std::size_t> draw_without_replacement(std::size_t pool_size,
                                                  std::size_t count,
                                                  std::uint64_t seed) {
  if (count > pool_size) {
    throw SemanticError("cannot draw " + std::to_string(count) + " samples from a pool of " +
                        std::to_string(pool_size));
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  RngStream rng(seed, 0x4144u);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(pool_size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

PoolRectification rectify_from_pool(const ModelGraph& model, const RawDataset& pool,
                                    const AdaptationPolicy& policy, std::uint64_t seed) {
  policy.validate();
  if (pool.shape != model.input_shape()) {
    throw ShapeError("representation pool images do not match the model input shape");
  }
  PoolRectification out{model, draw_without_replacement(
                                   pool.size(), static_cast<std::size_t>(policy.sample_count),
                                   seed)};
  out.model = rectify(model, to_tensor(pool, out.indices), policy);
  return out;
}

}  // namespace bnrect
