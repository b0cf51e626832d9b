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

#include "bnrect/diagnostics.h"

#include <cmath>
#include <sstream>

#include "bnrect/adaptation.h"
#include "bnrect/errors.h"
#include "bnrect/rng.h"
#include "io_util.h"

namespace bnrect {

std::vector<LayerSimilarity> cosine_feature_similarity(const std::vector<FeatureTap>& a,
                                                       const std::vector<FeatureTap>& b) {
  if (a.size() != b.size()) throw SemanticError("tap lists differ in length");
  std::vector<LayerSimilarity> out;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].layer != b[t].layer) {
      throw SemanticError("tap " + std::to_string(t) + " compares '" + a[t].layer +
                          "' with '" + b[t].layer + "'");
    }
    const Tensor& x = a[t].activation;
    const Tensor& y = b[t].activation;
    if (x.shape() != y.shape()) {
      throw ShapeError("tap '" + a[t].layer + "' shapes " + x.shape().str() + " vs " +
                       y.shape().str());
    }
    LayerSimilarity s{a[t].layer, 0.0, 0, 0};
    const std::size_t len = x.shape().sample();
    double total = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      double dot = 0.0, xx = 0.0, yy = 0.0;
      for (std::size_t i = n * len; i < (n + 1) * len; ++i) {
        dot += static_cast<double>(x[i]) * y[i];
        xx += static_cast<double>(x[i]) * x[i];
        yy += static_cast<double>(y[i]) * y[i];
      }
      if (xx == 0.0 || yy == 0.0) {
        ++s.skipped;
        continue;
      }
      total += dot / (std::sqrt(xx) * std::sqrt(yy));
      ++s.samples;
    }
    s.mean = s.samples ? total / static_cast<double>(s.samples) : 0.0;
    out.push_back(s);
  }
  return out;
}

BatchStats probe_layer_stats(const ModelGraph& model, const Tensor& batch,
                             const std::string& layer) {
  model.batch_norm(layer);  // rejects non-BN probes
  ForwardOptions opts;
  opts.taps.push_back(input_tap_for(model, layer));
  const ForwardResult r = forward(model, batch, opts);
  return compute_batch_stats(r.taps.front().activation);
}

StatDistance stat_distance(const ModelGraph& model, const Tensor& batch_a,
                           const Tensor& batch_b, const std::string& layer) {
  const BatchStats sa = probe_layer_stats(model, batch_a, layer);
  const BatchStats sb = probe_layer_stats(model, batch_b, layer);
  StatDistance d;
  const std::size_t c = sa.mean.size();
  for (std::size_t i = 0; i < c; ++i) {
    d.mean += std::abs(static_cast<double>(sa.mean[i]) - sb.mean[i]);
    d.variance += std::abs(static_cast<double>(sa.variance[i]) - sb.variance[i]);
  }
  d.mean /= static_cast<double>(c);
  d.variance /= static_cast<double>(c);
  return d;
}

StatDistance average_stat_distance(const ModelGraph& model, const RawDataset& pool_a,
                                   const RawDataset& pool_b, const std::string& layer,
                                   std::size_t batch_size, std::size_t pairs,
                                   std::uint64_t seed) {
  if (pairs == 0) throw SemanticError("need at least one batch pair");
  StatDistance acc;
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto ia = draw_without_replacement(pool_a.size(), batch_size, mix64({seed, p, 0}));
    const auto ib = draw_without_replacement(pool_b.size(), batch_size, mix64({seed, p, 1}));
    const StatDistance d =
        stat_distance(model, to_tensor(pool_a, ia), to_tensor(pool_b, ib), layer);
    acc.mean += d.mean;
    acc.variance += d.variance;
  }
  acc.mean /= static_cast<double>(pairs);
  acc.variance /= static_cast<double>(pairs);
  return acc;
}

std::vector<SimilarityPoint> severity_similarity_curve(const ModelGraph& model,
                                                       const std::vector<ModelGraph>& adapted,
                                                       const Tensor& clean,
                                                       const std::vector<Tensor>& corrupted,
                                                       const std::string& layer) {
  if (model.index_of(layer) < 0) throw SemanticError("no layer named '" + layer + "'");
  if (adapted.size() != 1 && adapted.size() != corrupted.size()) {
    throw SemanticError("need one adapted model or one per corrupted batch");
  }
  for (const Tensor& t : corrupted) {
    if (t.shape() != clean.shape()) {
      throw SemanticError("corrupted batch " + t.shape().str() +
                          " is not paired with the clean batch " + clean.shape().str());
    }
  }
  ForwardOptions opts;
  opts.taps.push_back(layer);
  auto features = [&](const ModelGraph& m, const Tensor& x) {
    return forward(m, x, opts).taps;
  };
  const std::vector<FeatureTap> ref = features(model, clean);
  std::vector<SimilarityPoint> out;
  const ModelGraph& adapted0 = adapted.size() == 1 ? adapted.front() : model;
  out.push_back({0, cosine_feature_similarity(ref, ref).front().mean,
                 cosine_feature_similarity(ref, features(adapted0, clean)).front().mean});
  for (std::size_t s = 0; s < corrupted.size(); ++s) {
    const ModelGraph& am = adapted.size() == 1 ? adapted.front() : adapted[s];
    out.push_back(
        {static_cast<int>(s + 1),
         cosine_feature_similarity(ref, features(model, corrupted[s])).front().mean,
         cosine_feature_similarity(ref, features(am, corrupted[s])).front().mean});
  }
  return out;
}

void write_similarity_csv(const std::vector<SimilarityPoint>& curve,
                          const std::filesystem::path& path) {
  std::ostringstream os;
  os << "severity,unadapted,adapted\n";
  for (const SimilarityPoint& p : curve) {
    os << p.severity << ',' << io::format_double(p.unadapted) << ','
       << io::format_double(p.adapted) << '\n';
  }
  io::write_file(path, os.str());
}

}  // namespace bnrect
