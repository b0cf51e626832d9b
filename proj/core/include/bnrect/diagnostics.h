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

#ifndef BNRECT_DIAGNOSTICS_H_
#define BNRECT_DIAGNOSTICS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bnrect/dataset.h"
#include "bnrect/model.h"

namespace bnrect {

struct LayerSimilarity {
  std::string layer;
  double mean = 0.0;          // over samples with non-zero norms
  std::size_t samples = 0;
  std::size_t skipped = 0;    // zero-norm samples
};

// Per layer: cosine similarity of each sample's flattened features, averaged
// over the batch. Taps are matched by position and must agree in layer name
// and shape (ShapeError / SemanticError otherwise).
std::vector<LayerSimilarity> cosine_feature_similarity(const std::vector<FeatureTap>& a,
                                                       const std::vector<FeatureTap>& b);

struct StatDistance {
  double mean = 0.0;      // channel-averaged |mu_a - mu_b|
  double variance = 0.0;  // channel-averaged |var_a - var_b|
};

// Batch statistics of the activations entering BN layer `layer`, under
// eval-mode propagation.
BatchStats probe_layer_stats(const ModelGraph& model, const Tensor& batch,
                             const std::string& layer);

StatDistance stat_distance(const ModelGraph& model, const Tensor& batch_a,
                           const Tensor& batch_b, const std::string& layer);

// Averages stat_distance over `pairs` batch pairs, each batch drawn without
// replacement from its pool.
StatDistance average_stat_distance(const ModelGraph& model, const RawDataset& pool_a,
                                   const RawDataset& pool_b, const std::string& layer,
                                   std::size_t batch_size, std::size_t pairs,
                                   std::uint64_t seed);

struct SimilarityPoint {
  int severity = 0;
  double unadapted = 0.0;
  double adapted = 0.0;
};

// Severity 0 compares the clean batch with itself. `corrupted[s-1]` holds
// the same images as `clean` at severity s. `adapted` holds either one model
// used for every severity or one model per corrupted batch (severity 0 then
// uses `model`). Throws SemanticError for unpaired batches.
std::vector<SimilarityPoint> severity_similarity_curve(const ModelGraph& model,
                                                       const std::vector<ModelGraph>& adapted,
                                                       const Tensor& clean,
                                                       const std::vector<Tensor>& corrupted,
                                                       const std::string& layer);

void write_similarity_csv(const std::vector<SimilarityPoint>& curve,
                          const std::filesystem::path& path);

}  // namespace bnrect

#endif  // BNRECT_DIAGNOSTICS_H_
