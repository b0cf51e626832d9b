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

#ifndef BNRECT_TRAINER_H_
#define BNRECT_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnrect/corruptions.h"
#include "bnrect/dataset.h"
#include "bnrect/model.h"

namespace bnrect {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 64;
  float learning_rate = 0.02f;
  float momentum = 0.9f;       // SGD momentum
  float weight_decay = 5e-4f;  // conv/dense weights only
  std::uint64_t seed = 1;
  // When set, every training image is replaced by a corrupted copy at this
  // fixed severity, with fresh noise each epoch.
  std::optional<CorruptionSpec> augmentation;

  // Throws SemanticError: batch_size >= 2, learning_rate >= 0, epochs >= 1.
  void validate() const;
  std::string describe() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;            // mean minibatch loss
  double train_accuracy = 0.0;  // train-mode predictions on seen batches
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  ModelGraph model;
  std::vector<EpochRecord> trace;
};

struct TrainOptions {
  const RawDataset* eval_set = nullptr;  // eval accuracy per epoch when set
  const SeverityTable* severity_table = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Minibatch SGD with momentum on softmax cross-entropy. Minibatches come
// from a per-epoch shuffle; the incomplete tail batch is dropped. BN
// population statistics are the moving averages accumulated by train-mode
// forwards. Throws NumericError naming the epoch and step on a non-finite
// loss.
TrainResult train(const ModelGraph& model, const RawDataset& data,
                  const TrainConfig& config, const TrainOptions& options = {});

void write_trace_csv(const std::vector<EpochRecord>& trace,
                     const std::filesystem::path& path);

// Loss and parameter gradients of one train-mode minibatch.
struct GradientResult {
  double loss = 0.0;
  int correct = 0;
  // One entry per trainable parameter array, in visit_parameters order.
  std::vector<std::vector<float>> grads;
  std::vector<std::string> names;
  ModelGraph updated;  // BN moving averages advanced
};

GradientResult compute_gradients(const ModelGraph& model, const Tensor& x,
                                 std::span<const int> labels);

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  // Entries whose +-step perturbation flipped a ReLU input sign; central
  // differences are not valid across the kink, so they are excluded.
  std::size_t skipped_kinks = 0;
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> failures;  // rel_error > tolerance
  double tolerance = 0.0;
  bool passed() const { return failures.empty(); }
};

struct GradCheckOptions {
  double tolerance = 1e-3;
  double step = 1e-3;
  // If > 0, check at most this many entries per parameter array
  // (evenly strided).
  std::size_t max_entries_per_param = 0;
};

// Compares the float analytic gradients of compute_gradients against
// central finite differences of a double-precision forward pass.
// Relative error: |a - n| / max(|a|, |n|, floor), where floor is 1e-3 times
// the largest |n| over all checked entries.
GradCheckReport grad_check(const ModelGraph& model, const Tensor& x,
                           std::span<const int> labels,
                           const GradCheckOptions& options = {});

}  // namespace bnrect

#endif  // BNRECT_TRAINER_H_
