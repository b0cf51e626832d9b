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

#include "bnrect/ablation.h"

#include <sstream>

#include "bnrect/errors.h"
#include "bnrect/metrics.h"
#include "bnrect/rng.h"
#include "io_util.h"

namespace bnrect {

std::vector<SampleCountRow> ablate_sample_count(const ModelGraph& model,
                                                const RawDataset& pool,
                                                const std::vector<int>& counts,
                                                std::uint64_t seed, int repeats,
                                                std::optional<double> baseline_error) {
  if (repeats < 1) throw SemanticError("repeats must be >= 1");
  for (int n : counts) {
    if (n < 0 || static_cast<std::size_t>(n) > pool.size()) {
      throw SemanticError("sample count " + std::to_string(n) + " outside [1, " +
                          std::to_string(pool.size()) + "]");
    }
  }
  resolve_layers(model, AdaptationPolicy{});
  auto row_for = [&](int n, double error) {
    SampleCountRow row{n, 1.0 - error, std::nullopt};
    if (baseline_error) {
      const double e[] = {error};
      const double b[] = {*baseline_error};
      row.ce = corruption_error(e, b);
    }
    return row;
  };
  std::vector<SampleCountRow> rows;
  rows.push_back(row_for(0, top1_error(model, pool)));
  for (int n : counts) {
    if (n == 0) continue;
    AdaptationPolicy policy;
    policy.sample_count = n;
    double error = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t s = mix64({seed, static_cast<std::uint64_t>(n),
                                     static_cast<std::uint64_t>(r)});
      error += top1_error(rectify_from_pool(model, pool, policy, s).model, pool);
    }
    rows.push_back(row_for(n, error / repeats));
  }
  return rows;
}

std::vector<PolicyRow> ablate_policies(const ModelGraph& model,
                                       const std::vector<CorruptedCell>& cells,
                                       const std::vector<AdaptationPolicy>& policies,
                                       std::uint64_t seed) {
  if (cells.empty()) throw SemanticError("policy ablation needs at least one cell");
  std::vector<PolicyRow> rows;
  auto mean_acc = [&](const std::optional<AdaptationPolicy>& policy) {
    double acc = 0.0;
    for (const CorruptedCell& cell : cells) {
      if (policy) {
        const ModelGraph m =
            rectify_from_pool(model, cell.data, *policy,
                              cell_seed(seed, cell.kind, cell.severity))
                .model;
        acc += 1.0 - top1_error(m, cell.data);
      } else {
        acc += 1.0 - top1_error(model, cell.data);
      }
    }
    return acc / static_cast<double>(cells.size());
  };
  rows.push_back({"none", mean_acc(std::nullopt)});
  for (const AdaptationPolicy& p : policies) rows.push_back({p.describe(), mean_acc(p)});
  return rows;
}

std::vector<AdaptationPolicy> stat_policies(int n) {
  std::vector<AdaptationPolicy> out;
  for (StatScope s : {StatScope::kBoth, StatScope::kMeanOnly, StatScope::kVarianceOnly}) {
    AdaptationPolicy p;
    p.stats = s;
    p.sample_count = n;
    out.push_back(p);
  }
  return out;
}

std::vector<AdaptationPolicy> layer_policies(int n) {
  std::vector<AdaptationPolicy> out;
  for (LayerScope s : {LayerScope::kAll, LayerScope::kFront, LayerScope::kMiddle,
                       LayerScope::kEnd}) {
    AdaptationPolicy p;
    p.layers = s;
    p.sample_count = n;
    out.push_back(p);
  }
  return out;
}

std::string sample_count_csv(const std::vector<SampleCountRow>& rows) {
  std::ostringstream os;
  os << "n,accuracy,ce\n";
  for (const SampleCountRow& r : rows) {
    os << r.n << ',' << io::format_double(r.accuracy) << ',';
    if (r.ce) os << io::format_double(*r.ce);
    os << '\n';
  }
  return os.str();
}

std::string policy_csv(const std::vector<PolicyRow>& rows) {
  std::ostringstream os;
  os << "policy,accuracy\n";
  for (const PolicyRow& r : rows) {
    os << '"' << r.policy << "\"," << io::format_double(r.accuracy) << '\n';
  }
  return os.str();
}

}  // namespace bnrect
