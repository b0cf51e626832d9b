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

// bnrect: dataset synthesis, training, corruption, test-time BN
// rectification, evaluation, ablations and diagnostics.
//
// Exit codes: 0 ok, 2 usage, 3 io/format, 4 shape/semantic, 5 numeric,
// 1 anything else. Failures print one line to stderr:
//   bnrect-error kind=<kind> code=<n> message="<text>"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "bnrect/ablation.h"
#include "bnrect/adaptation.h"
#include "bnrect/corruptions.h"
#include "bnrect/dataset.h"
#include "bnrect/diagnostics.h"
#include "bnrect/errors.h"
#include "bnrect/metrics.h"
#include "bnrect/rng.h"
#include "bnrect/serialize.h"
#include "bnrect/trainer.h"
#include "io_util.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace bnrect::cli {
namespace {

constexpr const char* kVersion = "0.1.0";

ordered_json run_header(const std::string& command) {
  ordered_json j;
  j["tool"] = "bnrect";
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

void write_run_manifest(const fs::path& path, const ordered_json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  return fs::path(base.string() + suffix);
}

SeverityTable load_table(const std::string& path) {
  if (path.empty()) return SeverityTable::defaults();
  SeverityTable t = SeverityTable::load(path);
  t.validate();
  return t;
}

std::vector<CorruptionKind> parse_kinds(const std::string& text) {
  if (text.empty() || text == "all") {
    const auto& all = all_corruption_kinds();
    return {all.begin(), all.end()};
  }
  std::vector<CorruptionKind> out;
  for (const std::string& k : io::split(text, ',')) {
    out.push_back(parse_corruption_kind(io::trim(k)));
  }
  return out;
}

std::vector<int> parse_severities(const std::string& text) {
  std::vector<int> out = io::parse_int_list(text, "severities");
  for (int s : out) {
    if (s < 1 || s > kNumSeverities) {
      throw SemanticError("severity " + std::to_string(s) + " outside 1..5");
    }
  }
  return out;
}

std::vector<CorruptedCell> filter_cells(std::vector<CorruptedCell> cells,
                                        const std::string& kinds,
                                        const std::string& severities) {
  std::vector<CorruptedCell> out;
  const std::vector<CorruptionKind> ks = parse_kinds(kinds);
  const std::vector<int> ss = severities.empty() ? std::vector<int>{1, 2, 3, 4, 5}
                                                 : parse_severities(severities);
  for (CorruptedCell& c : cells) {
    if (std::find(ks.begin(), ks.end(), c.kind) != ks.end() &&
        std::find(ss.begin(), ss.end(), c.severity) != ss.end()) {
      out.push_back(std::move(c));
    }
  }
  if (out.empty()) throw SemanticError("no corrupted cells match the selection");
  return out;
}

const CorruptedCell& find_cell(const std::vector<CorruptedCell>& cells, CorruptionKind kind,
                               int severity) {
  for (const CorruptedCell& c : cells) {
    if (c.kind == kind && c.severity == severity) return c;
  }
  throw IoError("corrupted directory has no " + std::string(to_string(kind)) + ":" +
                std::to_string(severity) + " cell");
}

struct PolicyFlags {
  int n = kDefaultSampleCount;
  std::string stats = "both";
  std::string layers = "all";

  void add(CLI::App* app) {
    app->add_option("--n", n, "Representation samples per rectification")->capture_default_str();
    app->add_option("--stats", stats, "both|mean|var")->capture_default_str();
    app->add_option("--layers", layers, "all|front|middle|end|name,name,...")
        ->capture_default_str();
  }
  AdaptationPolicy policy() const {
    AdaptationPolicy p;
    p.stats = parse_stat_scope(stats);
    p.set_layers(layers);
    p.sample_count = n;
    p.validate();
    for (const std::string& w : p.warnings()) std::cerr << "warning: " << w << '\n';
    return p;
  }
};

// ---- make-dataset ----------------------------------------------------------

struct MakeDatasetArgs {
  std::size_t train = 5000;
  std::size_t test = 1000;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_make_dataset(const MakeDatasetArgs& a) {
  const fs::path dir(a.out_dir);
  const RawDataset train = make_synthetic_dataset(a.train, a.seed);
  const RawDataset test = make_synthetic_dataset(a.test, mix64({a.seed, 0x7e57u}));
  write_dataset(train, dir / "train.rset", dir / "train.rlbl");
  write_dataset(test, dir / "test.rset", dir / "test.rlbl");
  ordered_json j = run_header("make-dataset");
  j["train"] = a.train;
  j["test"] = a.test;
  j["seed"] = a.seed;
  j["out_dir"] = a.out_dir;
  j["classes"] = synthetic_class_names();
  write_run_manifest(dir / "make-dataset.run.json", j);
  std::cout << "wrote " << a.train << " train and " << a.test << " test images to "
            << dir.string() << '\n';
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string preset = "tiny-cnn-bn";
  std::string data, labels, eval_data, eval_labels;
  std::string augment;
  std::string severity_table;
  std::string out;
  int classes = 0;  // 0: max label + 1
  TrainConfig config;
};

int run_train(TrainArgs a) {
  const RawDataset data = read_dataset(a.data, a.labels);
  std::optional<RawDataset> eval;
  if (!a.eval_data.empty()) eval = read_dataset(a.eval_data, a.eval_labels);
  const int classes = a.classes > 0 ? a.classes : max_label(data) + 1;
  if (!a.augment.empty()) a.config.augmentation = parse_corruption_spec(a.augment, a.config.seed);
  const SeverityTable table = load_table(a.severity_table);

  const ModelGraph init = build_preset(a.preset, data.shape, classes, a.config.seed);
  TrainOptions opts;
  opts.severity_table = &table;
  if (eval) opts.eval_set = &*eval;
  opts.on_epoch = [](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " loss " << r.loss << " train_acc " << r.train_accuracy;
    if (r.eval_accuracy) std::cerr << " eval_acc " << *r.eval_accuracy;
    std::cerr << '\n';
  };
  const TrainResult result = train(init, data, a.config, opts);
  const fs::path base = model_base(a.out);
  save_model(result.model, base);
  write_trace_csv(result.trace, with_suffix(base, ".trace.csv"));

  ordered_json j = run_header("train");
  j["preset"] = a.preset;
  j["data"] = a.data;
  j["labels"] = a.labels;
  j["eval_data"] = a.eval_data;
  j["eval_labels"] = a.eval_labels;
  j["classes"] = classes;
  j["epochs"] = a.config.epochs;
  j["batch"] = a.config.batch_size;
  j["lr"] = a.config.learning_rate;
  j["momentum"] = a.config.momentum;
  j["weight_decay"] = a.config.weight_decay;
  j["seed"] = a.config.seed;
  j["augment"] = a.augment;
  j["severity_table"] = a.severity_table;
  j["out"] = base.string();
  j["model_id"] = model_identifier(result.model);
  write_run_manifest(with_suffix(base, ".run.json"), j);
  std::cout << "saved " << base.string() << " (" << model_identifier(result.model) << ")\n";
  return 0;
}

// ---- corrupt ---------------------------------------------------------------

struct CorruptArgs {
  std::string data, labels;
  std::string kinds = "all";
  std::string severities = "1,2,3,4,5";
  std::uint64_t seed = 0;
  std::string severity_table;
  std::string out_dir;
};

int run_corrupt(const CorruptArgs& a) {
  const RawDataset clean = read_dataset(a.data, a.labels);
  const SeverityTable table = load_table(a.severity_table);
  const std::vector<CorruptionKind> kinds = parse_kinds(a.kinds);
  const std::vector<int> sevs = parse_severities(a.severities);
  const fs::path dir(a.out_dir);
  for (CorruptionKind kind : kinds) {
    for (int sev : sevs) {
      CorruptedCell cell{kind, sev, corrupt_dataset(clean, {kind, sev, a.seed}, table)};
      write_cell(dir, cell);
    }
  }
  ordered_json j = run_header("corrupt");
  j["data"] = a.data;
  j["labels"] = a.labels;
  ordered_json ks = ordered_json::array();
  for (CorruptionKind k : kinds) ks.push_back(std::string(to_string(k)));
  j["kinds"] = ks;
  j["severities"] = sevs;
  j["seed"] = a.seed;
  j["severity_table"] = a.severity_table;
  j["severity_values"] = table.to_text();
  j["out_dir"] = a.out_dir;
  write_run_manifest(dir / "corrupt.run.json", j);
  std::cout << "wrote " << kinds.size() * sevs.size() << " cells to " << dir.string() << '\n';
  return 0;
}

// ---- adapt -----------------------------------------------------------------

struct AdaptArgs {
  std::string model, data, labels;
  std::uint64_t seed = 0;
  PolicyFlags policy;
  std::string out;
};

int run_adapt(const AdaptArgs& a) {
  const ModelGraph model = load_model(a.model);
  // Labels are never used for adaptation.
  const RawDataset pool = a.labels.empty() ? read_images(a.data) : read_dataset(a.data, a.labels);
  const AdaptationPolicy policy = a.policy.policy();
  const PoolRectification r = rectify_from_pool(model, pool, policy, a.seed);
  const fs::path base = model_base(a.out);
  save_model(r.model, base);
  ordered_json j = run_header("adapt");
  j["model"] = a.model;
  j["data"] = a.data;
  j["labels"] = a.labels;
  j["n"] = policy.sample_count;
  j["stats"] = std::string(to_string(policy.stats));
  j["layers"] = a.policy.layers;
  j["resolved_layers"] = resolve_layers(model, policy);
  j["seed"] = a.seed;
  j["representation_indices"] = r.indices;
  j["out"] = base.string();
  write_run_manifest(with_suffix(base, ".run.json"), j);
  std::cout << "saved " << base.string() << " (" << policy.describe() << ")\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string model, corrupted_dir, clean_data, clean_labels, baseline_errors;
  std::string kinds = "all";
  std::string severities;
  bool adapt = false;
  bool exclude_representation = false;
  std::uint64_t seed = 0;
  PolicyFlags policy;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  const ModelGraph model = load_model(a.model);
  const RawDataset clean = read_dataset(a.clean_data, a.clean_labels);
  const std::vector<CorruptedCell> cells =
      filter_cells(read_corrupted_dir(a.corrupted_dir), a.kinds, a.severities);
  std::optional<ErrorTable> baseline;
  if (!a.baseline_errors.empty()) baseline = read_error_table(a.baseline_errors);

  const EvalResult plain = evaluate(model, cells, clean);
  const EvalReport plain_report = make_report(plain.table, baseline ? &*baseline : nullptr);
  std::optional<EvalReport> adapted_report;
  std::optional<double> clean_adapted;
  std::string csv = error_table_csv(plain.table);
  if (a.adapt) {
    EvalOptions opts;
    opts.policy = a.policy.policy();
    opts.seed = a.seed;
    opts.exclude_representation = a.exclude_representation;
    const EvalResult ad = evaluate(model, cells, clean, opts);
    adapted_report = make_report(ad.table, baseline ? &*baseline : nullptr);
    // Clean accuracy after rectifying on clean representation samples.
    const PoolRectification r = rectify_from_pool(model, clean, *opts.policy, a.seed);
    clean_adapted = 1.0 - top1_error(r.model, clean);
    csv += error_table_csv(ad.table, false);
  }
  fs::path out(a.out);
  if (out.extension() == ".csv" || out.extension() == ".json") out.replace_extension();
  io::write_file(with_suffix(out, ".csv"), csv);
  const std::string summary =
      summary_json(plain_report, adapted_report, plain.clean_accuracy, clean_adapted);
  io::write_file(with_suffix(out, ".json"), summary);

  ordered_json j = run_header("evaluate");
  j["model"] = a.model;
  j["corrupted_dir"] = a.corrupted_dir;
  j["clean_data"] = a.clean_data;
  j["clean_labels"] = a.clean_labels;
  j["baseline_errors"] = a.baseline_errors;
  j["kinds"] = a.kinds;
  j["severities"] = a.severities;
  j["adapt"] = a.adapt;
  if (a.adapt) {
    j["policy"] = a.policy.policy().describe();
    j["exclude_representation"] = a.exclude_representation;
    j["seed"] = a.seed;
  }
  j["out"] = out.string();
  write_run_manifest(with_suffix(out, ".run.json"), j);
  std::cout << summary;
  return 0;
}

// ---- ablate ----------------------------------------------------------------

struct AblateArgs {
  std::string model, corrupted_dir, mode;
  std::string kind = "gaussian_noise";
  int severity = 3;
  std::string counts = "1,2,4,8,16,32,64";
  std::string kinds = "all";
  std::string severities = "3";
  int repeats = 1;
  int n = kDefaultSampleCount;
  std::uint64_t seed = 0;
  std::string baseline_errors;
  std::string out;
};

int run_ablate(const AblateArgs& a) {
  const ModelGraph model = load_model(a.model);
  std::vector<CorruptedCell> cells = read_corrupted_dir(a.corrupted_dir);
  ordered_json j = run_header("ablate");
  j["model"] = a.model;
  j["corrupted_dir"] = a.corrupted_dir;
  j["mode"] = a.mode;
  j["seed"] = a.seed;
  std::string csv;
  if (a.mode == "samples") {
    const CorruptionKind kind = parse_corruption_kind(a.kind);
    const CorruptedCell& cell = find_cell(cells, kind, a.severity);
    std::optional<double> base_err;
    if (!a.baseline_errors.empty()) {
      const std::vector<double> e = read_error_table(a.baseline_errors).errors(kind);
      if (static_cast<std::size_t>(a.severity) > e.size()) {
        throw SemanticError("baseline errors lack severity " + std::to_string(a.severity));
      }
      base_err = e[a.severity - 1];
    }
    csv = sample_count_csv(ablate_sample_count(model, cell.data,
                                               io::parse_int_list(a.counts, "counts"), a.seed,
                                               a.repeats, base_err));
    j["kind"] = a.kind;
    j["severity"] = a.severity;
    j["counts"] = a.counts;
    j["repeats"] = a.repeats;
    j["baseline_errors"] = a.baseline_errors;
  } else {
    cells = filter_cells(std::move(cells), a.kinds, a.severities);
    const std::vector<AdaptationPolicy> policies =
        a.mode == "policy" ? stat_policies(a.n) : layer_policies(a.n);
    csv = policy_csv(ablate_policies(model, cells, policies, a.seed));
    j["kinds"] = a.kinds;
    j["severities"] = a.severities;
    j["n"] = a.n;
  }
  fs::path out(a.out);
  if (out.extension() == ".csv") out.replace_extension();
  io::write_file(with_suffix(out, ".csv"), csv);
  j["out"] = with_suffix(out, ".csv").string();
  write_run_manifest(with_suffix(out, ".run.json"), j);
  std::cout << csv;
  return 0;
}

// ---- diagnose --------------------------------------------------------------

struct DiagnoseArgs {
  std::string model, adapted_model, layer, mode;
  std::string clean_data, clean_labels, corrupted_dir;
  std::string kind = "gaussian_noise";
  int severity = 3;
  int batch = 32;
  int pairs = 100;
  std::uint64_t seed = 0;
  PolicyFlags policy;
  std::string out;
};

int run_diagnose(const DiagnoseArgs& a) {
  const ModelGraph model = load_model(a.model);
  const RawDataset clean = read_dataset(a.clean_data, a.clean_labels);
  const std::vector<CorruptedCell> cells = read_corrupted_dir(a.corrupted_dir);
  const CorruptionKind kind = parse_corruption_kind(a.kind);
  ordered_json j = run_header("diagnose");
  j["model"] = a.model;
  j["layer"] = a.layer;
  j["mode"] = a.mode;
  j["clean_data"] = a.clean_data;
  j["corrupted_dir"] = a.corrupted_dir;
  j["kind"] = a.kind;
  j["batch"] = a.batch;
  j["seed"] = a.seed;
  std::string csv;
  fs::path out(a.out);
  if (out.extension() == ".csv") out.replace_extension();
  if (a.mode == "cosine") {
    const std::vector<std::size_t> idx =
        draw_without_replacement(clean.size(), static_cast<std::size_t>(a.batch), a.seed);
    std::vector<Tensor> corrupted;
    for (int s = 1; s <= kNumSeverities; ++s) {
      const CorruptedCell& cell = find_cell(cells, kind, s);
      if (cell.data.size() != clean.size() || cell.data.labels != clean.labels) {
        throw SemanticError("corrupted cell " + std::string(to_string(kind)) + ":" +
                            std::to_string(s) + " is not paired with the clean set");
      }
      corrupted.push_back(to_tensor(cell.data, idx));
    }
    std::vector<ModelGraph> adapted;
    if (!a.adapted_model.empty()) {
      adapted.push_back(load_model(a.adapted_model));
      j["adapted_model"] = a.adapted_model;
    } else {
      AdaptationPolicy p = a.policy.policy();
      for (int s = 1; s <= kNumSeverities; ++s) {
        adapted.push_back(rectify_from_pool(model, find_cell(cells, kind, s).data, p,
                                            cell_seed(a.seed, kind, s))
                              .model);
      }
      j["policy"] = p.describe();
    }
    const auto curve =
        severity_similarity_curve(model, adapted, to_tensor(clean, idx), corrupted, a.layer);
    write_similarity_csv(curve, with_suffix(out, ".csv"));
    csv = io::read_file(with_suffix(out, ".csv"));
  } else {
    const CorruptedCell& cell = find_cell(cells, kind, a.severity);
    const std::size_t b = static_cast<std::size_t>(a.batch);
    const std::size_t pairs = static_cast<std::size_t>(a.pairs);
    const StatDistance cc = average_stat_distance(model, clean, clean, a.layer, b, pairs, a.seed);
    const StatDistance cx =
        average_stat_distance(model, clean, cell.data, a.layer, b, pairs, a.seed);
    csv = "comparison,mean_distance,var_distance\n";
    csv += "clean-vs-clean," + io::format_double(cc.mean) + "," + io::format_double(cc.variance) +
           "\n";
    csv += "clean-vs-" + std::string(to_string(kind)) + "-" + std::to_string(a.severity) + "," +
           io::format_double(cx.mean) + "," + io::format_double(cx.variance) + "\n";
    io::write_file(with_suffix(out, ".csv"), csv);
    j["severity"] = a.severity;
    j["pairs"] = a.pairs;
  }
  j["out"] = with_suffix(out, ".csv").string();
  write_run_manifest(with_suffix(out, ".run.json"), j);
  std::cout << csv;
  return 0;
}

struct Failure {
  const char* kind;
  int code;
};

Failure classify(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kFormat: return {"format", 3};
    case ErrorKind::kIo: return {"io", 3};
    case ErrorKind::kShape: return {"shape", 4};
    case ErrorKind::kSemantic: return {"semantic", 4};
    case ErrorKind::kNumeric: return {"numeric", 5};
  }
  return {"internal", 1};
}

int fail(const char* kind, int code, const std::string& message) {
  std::cerr << "bnrect-error kind=" << kind << " code=" << code << " message=\""
            << io::sanitize_line(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time batch-norm statistics rectification toolkit", "bnrect"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  MakeDatasetArgs md;
  auto* c_md = app.add_subcommand("make-dataset", "Synthesize the built-in 10-class dataset");
  c_md->add_option("--train", md.train)->capture_default_str();
  c_md->add_option("--test", md.test)->capture_default_str();
  c_md->add_option("--seed", md.seed)->capture_default_str();
  c_md->add_option("--out-dir", md.out_dir)->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a preset with minibatch SGD");
  c_tr->add_option("--preset", tr.preset)->capture_default_str();
  c_tr->add_option("--data", tr.data)->required();
  c_tr->add_option("--labels", tr.labels)->required();
  c_tr->add_option("--eval-data", tr.eval_data);
  c_tr->add_option("--eval-labels", tr.eval_labels);
  c_tr->add_option("--classes", tr.classes, "Class count (default: max label + 1)");
  c_tr->add_option("--epochs", tr.config.epochs)->capture_default_str();
  c_tr->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  c_tr->add_option("--batch", tr.config.batch_size)->capture_default_str();
  c_tr->add_option("--momentum", tr.config.momentum)->capture_default_str();
  c_tr->add_option("--weight-decay", tr.config.weight_decay)->capture_default_str();
  c_tr->add_option("--seed", tr.config.seed)->capture_default_str();
  c_tr->add_option("--augment", tr.augment, "kind:severity");
  c_tr->add_option("--severity-table", tr.severity_table);
  c_tr->add_option("--out", tr.out)->required();

  CorruptArgs co;
  auto* c_co = app.add_subcommand("corrupt", "Write the corruption grid of a dataset");
  c_co->add_option("--data", co.data)->required();
  c_co->add_option("--labels", co.labels)->required();
  c_co->add_option("--kinds", co.kinds, "all or a comma-separated list")->capture_default_str();
  c_co->add_option("--severities", co.severities)->capture_default_str();
  c_co->add_option("--seed", co.seed)->capture_default_str();
  c_co->add_option("--severity-table", co.severity_table);
  c_co->add_option("--out-dir", co.out_dir)->required();

  AdaptArgs ad;
  auto* c_ad = app.add_subcommand("adapt", "Rectify BN statistics from representation samples");
  c_ad->add_option("--model", ad.model)->required();
  c_ad->add_option("--data", ad.data)->required();
  c_ad->add_option("--labels", ad.labels, "Optional; labels are not used");
  c_ad->add_option("--seed", ad.seed)->capture_default_str();
  ad.policy.add(c_ad);
  c_ad->add_option("--out", ad.out)->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Error grid, CE/mCE and accuracy report");
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--corrupted-dir", ev.corrupted_dir)->required();
  c_ev->add_option("--clean-data", ev.clean_data)->required();
  c_ev->add_option("--clean-labels", ev.clean_labels)->required();
  c_ev->add_option("--baseline-errors", ev.baseline_errors, "CSV written by evaluate");
  c_ev->add_option("--kinds", ev.kinds)->capture_default_str();
  c_ev->add_option("--severities", ev.severities);
  c_ev->add_flag("--adapt", ev.adapt, "Also evaluate with per-cell rectification");
  c_ev->add_flag("--exclude-representation", ev.exclude_representation);
  c_ev->add_option("--seed", ev.seed)->capture_default_str();
  ev.policy.add(c_ev);
  c_ev->add_option("--out", ev.out, "Report path; .csv and .json are written")->required();

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Sample-count, statistics and layer ablations");
  c_ab->add_option("--model", ab.model)->required();
  c_ab->add_option("--corrupted-dir", ab.corrupted_dir)->required();
  c_ab->add_option("mode", ab.mode)->required()->check(CLI::IsMember({"samples", "policy", "layers"}));
  c_ab->add_option("--kind", ab.kind)->capture_default_str();
  c_ab->add_option("--severity", ab.severity)->capture_default_str();
  c_ab->add_option("--counts", ab.counts)->capture_default_str();
  c_ab->add_option("--repeats", ab.repeats)->capture_default_str();
  c_ab->add_option("--kinds", ab.kinds)->capture_default_str();
  c_ab->add_option("--severities", ab.severities)->capture_default_str();
  c_ab->add_option("--n", ab.n)->capture_default_str();
  c_ab->add_option("--seed", ab.seed)->capture_default_str();
  c_ab->add_option("--baseline-errors", ab.baseline_errors);
  c_ab->add_option("--out", ab.out)->required();

  DiagnoseArgs dg;
  auto* c_dg = app.add_subcommand("diagnose", "Feature similarity and statistic distance probes");
  c_dg->add_option("--model", dg.model)->required();
  c_dg->add_option("--adapted-model", dg.adapted_model);
  c_dg->add_option("--layer", dg.layer, "Probed layer (required)")->required();
  c_dg->add_option("mode", dg.mode)->required()->check(CLI::IsMember({"cosine", "statdist"}));
  c_dg->add_option("--clean-data", dg.clean_data)->required();
  c_dg->add_option("--clean-labels", dg.clean_labels)->required();
  c_dg->add_option("--corrupted-dir", dg.corrupted_dir)->required();
  c_dg->add_option("--kind", dg.kind)->capture_default_str();
  c_dg->add_option("--severity", dg.severity)->capture_default_str();
  c_dg->add_option("--batch", dg.batch)->capture_default_str();
  c_dg->add_option("--pairs", dg.pairs)->capture_default_str();
  c_dg->add_option("--seed", dg.seed)->capture_default_str();
  dg.policy.add(c_dg);
  c_dg->add_option("--out", dg.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", 2, e.what());
  }

  try {
    if (c_md->parsed()) return run_make_dataset(md);
    if (c_tr->parsed()) return run_train(tr);
    if (c_co->parsed()) return run_corrupt(co);
    if (c_ad->parsed()) return run_adapt(ad);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_ab->parsed()) return run_ablate(ab);
    if (c_dg->parsed()) return run_diagnose(dg);
  } catch (const Error& e) {
    const Failure f = classify(e);
    return fail(f.kind, f.code, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return fail("usage", 2, "no command");
}

}  // namespace bnrect::cli

int main(int argc, char** argv) { return bnrect::cli::main(argc, argv); }
