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

#ifndef BNRECT_METRICS_H_
#define BNRECT_METRICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnrect/adaptation.h"
#include "bnrect/corruptions.h"
#include "bnrect/dataset.h"
#include "bnrect/model.h"

namespace bnrect {

struct ErrorCell {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;
  double error = 0.0;  // top-1 error fraction
  std::size_t n_samples = 0;
};

struct ErrorTable {
  std::string model_id;
  bool adapted = false;
  std::string policy;  // empty when unadapted
  std::vector<ErrorCell> cells;

  // Per-severity errors of one corruption, severities ascending. Throws
  // SemanticError if the kind is absent.
  std::vector<double> errors(CorruptionKind kind) const;
  std::vector<CorruptionKind> kinds() const;  // in table order, unique
  double mean_error() const;
  // Errors in [0, 1], no duplicate cells, severities 1..5.
  void validate() const;
};

// Stable identifier of a model: preset plus weight and statistics hashes.
std::string model_identifier(const ModelGraph& model);

// Top-1 error of eval-mode predictions on `data`, skipping `excluded`
// sample indices. Throws SemanticError if a label is >= num_classes.
double top1_error(const ModelGraph& model, const RawDataset& data,
                  std::span<const std::size_t> excluded = {});

struct EvalOptions {
  // When set, every cell is evaluated on a copy of the model rectified from
  // that cell's images.
  std::optional<AdaptationPolicy> policy;
  std::uint64_t seed = 0;
  // Leave representation samples out of the evaluated images.
  bool exclude_representation = false;
};

struct EvalResult {
  ErrorTable table;
  double clean_accuracy = 0.0;
};

EvalResult evaluate(const ModelGraph& model, const std::vector<CorruptedCell>& cells,
                    const RawDataset& clean, const EvalOptions& options = {});

// Seed for the representation draw of one grid cell.
std::uint64_t cell_seed(std::uint64_t seed, CorruptionKind kind, int severity);

// Summed model errors over summed baseline errors, in percent. Throws
// SemanticError on length mismatch or a zero baseline sum.
double corruption_error(std::span<const double> model_errors,
                        std::span<const double> baseline_errors);

struct EvalReport {
  ErrorTable table;
  std::string baseline_id;
  std::map<CorruptionKind, double> ce;  // percent
  double mce = 0.0;                     // percent
  double accuracy = 0.0;                // 1 - mean error, fraction
};

// CE for every corruption of `table`; each must also appear in `baseline`.
// Without a baseline the CE map is empty and mce is NaN.
EvalReport make_report(const ErrorTable& table, const ErrorTable* baseline);

// CSV columns: corruption,severity,error,n_samples,adapted,policy. Errors
// are written as fractions at full precision so the file can serve as a
// CE baseline. A leading "# model=<id>" comment carries the identifier.
// Several tables (unadapted and adapted) may share one file; the reader
// keeps the rows whose adapted flag matches.
std::string error_table_csv(const ErrorTable& table, bool with_header = true);
ErrorTable parse_error_table_csv(std::string_view text, bool adapted = false);
void write_error_table(const ErrorTable& table, const std::filesystem::path& path);
ErrorTable read_error_table(const std::filesystem::path& path, bool adapted = false);

// JSON summary. Percentages rounded to one decimal. `adapted` supplies the
// starred fields (Acc*, mCE*, CE*).
std::string summary_json(const EvalReport& plain, const std::optional<EvalReport>& adapted,
                         double clean_accuracy,
                         std::optional<double> clean_accuracy_adapted = std::nullopt);

double round1(double percent);

}  // namespace bnrect

#endif  // BNRECT_METRICS_H_
