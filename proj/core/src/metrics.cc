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

#include "bnrect/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "bnrect/errors.h"
#include "bnrect/ops.h"
#include "bnrect/rng.h"
#include "io_util.h"
#include <nlohmann/json.hpp>

namespace bnrect {

std::vector<double> ErrorTable::errors(CorruptionKind kind) const {
  std::vector<std::pair<int, double>> rows;
  for (const ErrorCell& c : cells) {
    if (c.kind == kind) rows.emplace_back(c.severity, c.error);
  }
  if (rows.empty()) {
    throw SemanticError("error table has no cells for " + std::string(to_string(kind)));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.second);
  return out;
}

std::vector<CorruptionKind> ErrorTable::kinds() const {
  std::vector<CorruptionKind> out;
  for (const ErrorCell& c : cells) {
    if (std::find(out.begin(), out.end(), c.kind) == out.end()) out.push_back(c.kind);
  }
  return out;
}

double ErrorTable::mean_error() const {
  if (cells.empty()) throw SemanticError("empty error table");
  double sum = 0.0;
  for (const ErrorCell& c : cells) sum += c.error;
  return sum / static_cast<double>(cells.size());
}

void ErrorTable::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const ErrorCell& c : cells) {
    if (!(c.error >= 0.0 && c.error <= 1.0)) {
      throw SemanticError("error outside [0, 1] for " + std::string(to_string(c.kind)));
    }
    if (c.severity < 1 || c.severity > kNumSeverities) {
      throw SemanticError("severity " + std::to_string(c.severity) + " outside 1..5");
    }
    if (!seen.emplace(static_cast<int>(c.kind), c.severity).second) {
      throw SemanticError("duplicate cell " + std::string(to_string(c.kind)) + ":" +
                          std::to_string(c.severity));
    }
  }
}

std::string model_identifier(const ModelGraph& model) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%016llx/%016llx",
                static_cast<unsigned long long>(model.weights_fingerprint()),
                static_cast<unsigned long long>(model.fingerprint()));
  const std::string preset = model.metadata().preset.empty() ? "custom" : model.metadata().preset;
  return preset + "@" + buf;
}

double top1_error(const ModelGraph& model, const RawDataset& data,
                  std::span<const std::size_t> excluded) {
  data.validate();
  if (data.shape != model.input_shape()) {
    throw ShapeError("evaluation images do not match the model input shape");
  }
  if (data.size() > 0 && max_label(data) >= model.num_classes()) {
    throw SemanticError("label " + std::to_string(max_label(data)) +
                        " outside the model's " + std::to_string(model.num_classes()) +
                        " classes");
  }
  std::vector<char> skip(data.size(), 0);
  for (std::size_t i : excluded) {
    if (i < skip.size()) skip[i] = 1;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!skip[i]) keep.push_back(i);
  }
  if (keep.empty()) throw SemanticError("no samples left to evaluate");
  constexpr std::size_t kChunk = 250;
  std::size_t wrong = 0;
  for (std::size_t b = 0; b < keep.size(); b += kChunk) {
    const std::size_t count = std::min(kChunk, keep.size() - b);
    const std::span<const std::size_t> idx(keep.data() + b, count);
    const std::vector<int> pred = argmax_rows(predict(model, to_tensor(data, idx)));
    for (std::size_t k = 0; k < count; ++k) {
      wrong += pred[k] != data.labels[idx[k]] ? 1 : 0;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(keep.size());
}

std::uint64_t cell_seed(std::uint64_t seed, CorruptionKind kind, int severity) {
  return mix64({seed, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(severity)});
}

EvalResult evaluate(const ModelGraph& model, const std::vector<CorruptedCell>& cells,
                    const RawDataset& clean, const EvalOptions& options) {
  EvalResult out;
  out.table.model_id = model_identifier(model);
  out.table.adapted = options.policy.has_value();
  if (options.policy) {
    out.table.policy = options.policy->describe();
    resolve_layers(model, *options.policy);  // reject GN/IN models up front
  }
  out.clean_accuracy = 1.0 - top1_error(model, clean);
  for (const CorruptedCell& cell : cells) {
    ErrorCell row{cell.kind, cell.severity, 0.0, cell.data.size()};
    if (options.policy) {
      PoolRectification r = rectify_from_pool(
          model, cell.data, *options.policy, cell_seed(options.seed, cell.kind, cell.severity));
      std::span<const std::size_t> excluded;
      if (options.exclude_representation) {
        excluded = r.indices;
        row.n_samples -= r.indices.size();
      }
      row.error = top1_error(r.model, cell.data, excluded);
    } else {
      row.error = top1_error(model, cell.data);
    }
    out.table.cells.push_back(row);
  }
  out.table.validate();
  return out;
}

double corruption_error(std::span<const double> model_errors,
                        std::span<const double> baseline_errors) {
  if (model_errors.size() != baseline_errors.size() || model_errors.empty()) {
    throw SemanticError("corruption error needs matching non-empty severity vectors");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < model_errors.size(); ++i) {
    num += model_errors[i];
    den += baseline_errors[i];
  }
  if (!(den > 0.0)) throw SemanticError("baseline solves corruption perfectly");
  return 100.0 * num / den;
}

EvalReport make_report(const ErrorTable& table, const ErrorTable* baseline) {
  table.validate();
  EvalReport r;
  r.table = table;
  r.accuracy = 1.0 - table.mean_error();
  if (baseline == nullptr) {
    r.mce = std::nan("");
    return r;
  }
  baseline->validate();
  r.baseline_id = baseline->model_id;
  double sum = 0.0;
  for (CorruptionKind kind : table.kinds()) {
    const std::vector<double> e = table.errors(kind);
    const std::vector<double> b = baseline->errors(kind);
    if (e.size() != b.size()) {
      throw SemanticError("baseline severities for " + std::string(to_string(kind)) +
                          " do not match the evaluated grid");
    }
    const double ce = corruption_error(e, b);
    r.ce[kind] = ce;
    sum += ce;
  }
  r.mce = r.ce.empty() ? std::nan("") : sum / static_cast<double>(r.ce.size());
  return r;
}

std::string error_table_csv(const ErrorTable& table, bool with_header) {
  std::ostringstream os;
  if (with_header) {
    os << "# model=" << table.model_id << '\n';
    os << "corruption,severity,error,n_samples,adapted,policy\n";
  }
  for (const ErrorCell& c : table.cells) {
    os << to_string(c.kind) << ',' << c.severity << ',' << io::format_double(c.error) << ','
       << c.n_samples << ',' << (table.adapted ? 1 : 0) << ',' << table.policy << '\n';
  }
  return os.str();
}

ErrorTable parse_error_table_csv(std::string_view text, bool adapted) {
  ErrorTable t;
  bool header = false;
  std::size_t line_no = 0;
  for (const std::string& raw : io::split(text, '\n')) {
    ++line_no;
    const std::string_view line = io::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.substr(0, 8) == "# model=") t.model_id = std::string(line.substr(8));
      continue;
    }
    if (!header) {
      if (line != "corruption,severity,error,n_samples,adapted,policy") {
        throw FormatError("error table: unexpected header '" + std::string(line) + "'");
      }
      header = true;
      continue;
    }
    const std::vector<std::string> f = io::split(line, ',');
    // Explicit layer lists in the policy column contain commas.
    if (f.size() < 6) {
      throw FormatError("error table line " + std::to_string(line_no) + ": expected 6 fields");
    }
    ErrorCell c;
    try {
      c.kind = parse_corruption_kind(f[0]);
    } catch (const SemanticError& e) {
      throw FormatError(std::string("error table: ") + e.what());
    }
    c.severity = io::parse_int(f[1], "severity");
    c.error = io::parse_double(f[2], "error");
    c.n_samples = static_cast<std::size_t>(io::parse_u64(f[3], "n_samples"));
    if (f[4] != "0" && f[4] != "1") {
      throw FormatError("error table line " + std::to_string(line_no) + ": adapted must be 0 or 1");
    }
    if ((f[4] == "1") != adapted) continue;
    std::string policy = f[5];
    for (std::size_t i = 6; i < f.size(); ++i) policy += "," + f[i];
    t.adapted = adapted;
    t.policy = policy;
    t.cells.push_back(c);
  }
  if (!header) throw FormatError("error table: missing header");
  if (t.cells.empty()) {
    throw FormatError(std::string("error table has no ") + (adapted ? "adapted" : "unadapted") +
                      " rows");
  }
  try {
    t.validate();
  } catch (const SemanticError& e) {
    throw FormatError(std::string("error table: ") + e.what());
  }
  return t;
}

void write_error_table(const ErrorTable& table, const std::filesystem::path& path) {
  io::write_file(path, error_table_csv(table));
}

ErrorTable read_error_table(const std::filesystem::path& path, bool adapted) {
  return parse_error_table_csv(io::read_file(path), adapted);
}

double round1(double percent) { return std::round(percent * 10.0) / 10.0; }

std::string summary_json(const EvalReport& plain, const std::optional<EvalReport>& adapted,
                         double clean_accuracy, std::optional<double> clean_accuracy_adapted) {
  nlohmann::ordered_json j;
  j["model"] = plain.table.model_id;
  j["baseline"] = plain.baseline_id;
  j["clean_acc"] = round1(100.0 * clean_accuracy);
  j["Acc"] = round1(100.0 * plain.accuracy);
  auto pct_or_null = [](double v) -> nlohmann::ordered_json {
    if (std::isnan(v)) return nullptr;
    return round1(v);
  };
  j["mCE"] = pct_or_null(plain.mce);
  nlohmann::ordered_json ce;
  for (const auto& [kind, v] : plain.ce) ce[std::string(to_string(kind))] = round1(v);
  j["CE"] = ce;
  if (adapted) {
    j["policy"] = adapted->table.policy;
    if (clean_accuracy_adapted) j["clean_acc*"] = round1(100.0 * *clean_accuracy_adapted);
    j["Acc*"] = round1(100.0 * adapted->accuracy);
    j["mCE*"] = pct_or_null(adapted->mce);
    nlohmann::ordered_json ce_star;
    for (const auto& [kind, v] : adapted->ce) ce_star[std::string(to_string(kind))] = round1(v);
    j["CE*"] = ce_star;
  }
  return j.dump(2) + "\n";
}

}  // namespace bnrect
