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

#ifndef BNRECT_ABLATION_H_
#define BNRECT_ABLATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnrect/adaptation.h"
#include "bnrect/corruptions.h"
#include "bnrect/model.h"

namespace bnrect {

struct SampleCountRow {
  int n = 0;              // 0 is the unadapted reference
  double accuracy = 0.0;  // mean over repeats
  std::optional<double> ce;
};

// For each n: draw n samples from `pool` (fresh draw per n and repeat),
// rectify(both, all, n) and evaluate on `pool`. `baseline_error` enables the
// CE column (error / baseline_error, percent).
std::vector<SampleCountRow> ablate_sample_count(const ModelGraph& model,
                                                const RawDataset& pool,
                                                const std::vector<int>& counts,
                                                std::uint64_t seed, int repeats = 1,
                                                std::optional<double> baseline_error = {});

struct PolicyRow {
  std::string policy;     // describe() of the policy, "none" for unadapted
  double accuracy = 0.0;  // mean over cells
};

// Unadapted, then each policy, evaluated over every cell.
std::vector<PolicyRow> ablate_policies(const ModelGraph& model,
                                       const std::vector<CorruptedCell>& cells,
                                       const std::vector<AdaptationPolicy>& policies,
                                       std::uint64_t seed);

// both/mean/var at all layers, sample_count n.
std::vector<AdaptationPolicy> stat_policies(int n);
// both at all/front/middle/end, sample_count n.
std::vector<AdaptationPolicy> layer_policies(int n);

std::string sample_count_csv(const std::vector<SampleCountRow>& rows);
std::string policy_csv(const std::vector<PolicyRow>& rows);

}  // namespace bnrect

#endif  // BNRECT_ABLATION_H_
