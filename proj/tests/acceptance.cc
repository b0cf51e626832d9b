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

// End-to-end acceptance run. Trains the desk-scale models, then prints one
// "AC<k> PASS|FAIL <summary>" line per criterion on stdout, in order.
// Progress goes to stderr. Exit status is 0 only if every criterion passes.
//
//   acceptance [output-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bnrect/ablation.h"
#include "bnrect/adaptation.h"
#include "bnrect/corruptions.h"
#include "bnrect/dataset.h"
#include "bnrect/diagnostics.h"
#include "bnrect/errors.h"
#include "bnrect/metrics.h"
#include "bnrect/model.h"
#include "bnrect/normalization.h"
#include "bnrect/ops.h"
#include "bnrect/rng.h"
#include "bnrect/serialize.h"
#include "bnrect/trainer.h"
#include "io_util.h"
#include "test_util.h"

namespace fs = std::filesystem;
using namespace bnrect;

namespace {

constexpr ImageShape kShape{3, 32, 32};
constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kCorruptSeed = 7;
constexpr std::uint64_t kAdaptSeed = 11;
constexpr int kClasses = 10;
const std::string kProbeLayer = "bn2";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double fraction) { return fmt("%.1f", 100.0 * fraction); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Acceptance {
 public:
  explicit Acceptance(fs::path out) : out_(std::move(out)) {}

  int run();

 private:
  // Shared state, built lazily in run().
  void prepare_data();
  TrainResult train_preset(const std::string& preset, std::optional<CorruptionSpec> augment = {},
                           int epochs = TrainConfig{}.epochs);
  const RawDataset& cell(CorruptionKind kind, int severity);
  double accuracy(const ModelGraph& m, const RawDataset& ds) const { return 1.0 - top1_error(m, ds); }
  AdaptationPolicy default_policy() const { return AdaptationPolicy{}; }

  Verdict ac1();
  Verdict ac2();
  Verdict ac3();
  Verdict ac4();
  Verdict ac5();
  Verdict ac6();
  Verdict ac7();
  Verdict ac8();
  Verdict ac9();
  Verdict ac10();
  Verdict ac11();

  fs::path out_;
  Clock::time_point start_ = Clock::now();
  RawDataset train_, test_;
  std::map<std::pair<int, int>, RawDataset> cells_;
  std::optional<ModelGraph> bn_, ref_;
  double bn_clean_ = 0.0;
  double bn_train_seconds_ = 0.0;
  // Gaussian-noise severity 3: unadapted and rectified accuracy of bn_.
  double g3_acc_ = 0.0, g3_acc_star_ = 0.0;
};

void Acceptance::prepare_data() {
  train_ = make_synthetic_dataset(5000, kDataSeed, kShape);
  test_ = make_synthetic_dataset(1000, mix64({kDataSeed, 0x7e57u}), kShape);
}

TrainResult Acceptance::train_preset(const std::string& preset, std::optional<CorruptionSpec> augment,
                                     int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.augmentation = augment;
  TrainOptions opt;
  opt.on_epoch = [&](const EpochRecord& e) {
    std::cerr << "  " << preset << (augment ? "+aug" : "") << " epoch " << e.epoch << " loss "
              << fmt("%.4f", e.loss) << " train_acc " << fmt("%.3f", e.train_accuracy) << "  ["
              << fmt("%.0f", seconds_since(start_)) << "s]\n";
  };
  const auto t0 = Clock::now();
  TrainResult r = train(build_preset(preset, kShape, kClasses, kDataSeed), train_, cfg, opt);
  std::cerr << preset << " trained in " << fmt("%.1f", seconds_since(t0)) << "s\n";
  const std::string base = preset + (augment ? "-ub" : "");
  save_model(r.model, out_ / base);
  write_trace_csv(r.trace, out_ / (base + ".trace.csv"));
  return r;
}

const RawDataset& Acceptance::cell(CorruptionKind kind, int severity) {
  const auto key = std::make_pair(static_cast<int>(kind), severity);
  auto it = cells_.find(key);
  if (it == cells_.end()) {
    it = cells_.emplace(key, corrupt_dataset(test_, {kind, severity, kCorruptSeed})).first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------

Verdict Acceptance::ac1() {
  const auto t0 = Clock::now();
  TrainResult r = train_preset("tiny-cnn-bn");
  bn_train_seconds_ = seconds_since(t0);
  bn_ = r.model;
  bn_clean_ = accuracy(*bn_, test_);
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  g3_acc_ = accuracy(*bn_, g3);
  const ModelGraph adapted = rectify_from_pool(*bn_, g3, default_policy(), kAdaptSeed).model;
  g3_acc_star_ = accuracy(adapted, g3);
  const double runtime = seconds_since(start_);
  const double gain = 100.0 * (g3_acc_star_ - g3_acc_);
  Verdict v;
  v.pass = bn_clean_ >= 0.90 && gain >= 5.0 && runtime <= 600.0;
  v.detail = "clean_acc=" + pct(bn_clean_) + " (>=90) gaussian_noise:3 acc=" + pct(g3_acc_) +
             " acc*=" + pct(g3_acc_star_) + " gain=" + fmt("%.1f", gain) + "pt (>=5) runtime=" +
             fmt("%.0f", runtime) + "s (<=600)";
  return v;
}

Verdict Acceptance::ac2() {
  Verdict v;
  v.pass = true;
  std::ostringstream os;
  for (CorruptionKind k : {CorruptionKind::kGaussianNoise, CorruptionKind::kShotNoise,
                           CorruptionKind::kImpulseNoise, CorruptionKind::kBrightness}) {
    const RawDataset& c = cell(k, 3);
    const double a = accuracy(*bn_, c);
    const double s = accuracy(rectify_from_pool(*bn_, c, default_policy(), cell_seed(kAdaptSeed, k, 3)).model, c);
    const double d = 100.0 * (s - a);
    const bool ok = k == CorruptionKind::kBrightness ? std::abs(d) <= 10.0 : d >= 3.0;
    v.pass = v.pass && ok;
    os << to_string(k) << ":3 " << pct(a) << "->" << pct(s) << " (" << fmt("%+.1f", d) << "pt"
       << (k == CorruptionKind::kBrightness ? ", |d|<=10" : ", >=3") << ") ";
  }
  v.detail = os.str();
  return v;
}

Verdict Acceptance::ac3() {
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  const Tensor batch = to_tensor(g3, draw_without_replacement(g3.size(), 32, kAdaptSeed));
  const AdaptationPolicy p = default_policy();
  const ModelGraph adapted = rectify(*bn_, batch, p);

  ForwardOptions adapt;
  adapt.mode = ForwardMode::kAdapt;
  for (const auto& name : bn_->bn_layer_names()) adapt.adapt.emplace(name, StatComponents::kBoth);
  for (const Layer& l : bn_->layers()) adapt.taps.push_back(layer_name(l));
  const ForwardResult pass = forward(*bn_, batch, adapt);

  double worst = 0.0;
  for (const auto& name : bn_->bn_layer_names()) {
    const Tensor& in = pass.taps[bn_->index_of(input_tap_for(*bn_, name))].activation;
    const auto oracle = bnrect::testing::naive_channel_stats(in);
    const BNState& s = adapted.batch_norm(name).state;
    for (int c = 0; c < s.channels(); ++c) {
      worst = std::max(worst, std::abs(s.pop_mean[c] - oracle.mean[c]));
      worst = std::max(worst, std::abs(s.pop_var[c] - oracle.var[c]));
    }
  }
  ForwardOptions eval;
  eval.taps = adapt.taps;
  const ForwardResult replay = forward(adapted, batch, eval);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < pass.taps.size(); ++i) {
    if (!bitwise_equal(pass.taps[i].activation, replay.taps[i].activation)) ++mismatched;
  }
  Verdict v;
  v.pass = worst <= 1e-5 && mismatched == 0;
  v.detail = "max |pop - batch stat|=" + fmt("%.2e", worst) + " (<=1e-5) eval replay differs at " +
             std::to_string(mismatched) + "/" + std::to_string(pass.taps.size()) + " layers (0)";
  return v;
}

Verdict Acceptance::ac4() {
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  const std::vector<int> counts = {1, 2, 4, 8, 16, 32, 64};
  const auto rows = ablate_sample_count(*bn_, g3, counts, kAdaptSeed, 5);
  io::write_file(out_ / "sample_count.csv", sample_count_csv(rows));
  std::map<int, double> acc;
  for (const auto& r : rows) acc[r.n] = r.accuracy;
  Verdict v;
  v.pass = acc.at(32) >= acc.at(2) && acc.at(32) >= acc.at(8) - 0.01 && rows.size() == counts.size() + 1;
  std::ostringstream os;
  os << "gaussian_noise:3 Acc(n):";
  for (const auto& r : rows) os << " " << r.n << "=" << pct(r.accuracy);
  os << " | need Acc(32)>=Acc(2), Acc(32)>=Acc(8)-1; csv=sample_count.csv";
  v.detail = os.str();
  return v;
}

Verdict Acceptance::ac5() {
  AdaptationPolicy mean_only = default_policy(), var_only = default_policy();
  mean_only.stats = StatScope::kMeanOnly;
  var_only.stats = StatScope::kVarianceOnly;
  const ModelGraph m = rectify_from_pool(*bn_, test_, mean_only, kAdaptSeed).model;
  const ModelGraph s = rectify_from_pool(*bn_, test_, var_only, kAdaptSeed).model;
  bool untouched = m.weights_fingerprint() == bn_->weights_fingerprint() &&
                   s.weights_fingerprint() == bn_->weights_fingerprint();
  bool moved = true;
  for (const auto& name : bn_->bn_layer_names()) {
    const BNState& o = bn_->batch_norm(name).state;
    untouched = untouched && m.batch_norm(name).state.pop_var == o.pop_var &&
                s.batch_norm(name).state.pop_mean == o.pop_mean;
    moved = moved && m.batch_norm(name).state.pop_mean != o.pop_mean &&
            s.batch_norm(name).state.pop_var != o.pop_var;
    m.batch_norm(name).state.validate();
    s.batch_norm(name).state.validate();
  }
  const double am = accuracy(m, test_), as = accuracy(s, test_);
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  const double gm = accuracy(rectify_from_pool(*bn_, g3, mean_only, kAdaptSeed).model, g3);
  const double gs = accuracy(rectify_from_pool(*bn_, g3, var_only, kAdaptSeed).model, g3);
  Verdict v;
  v.pass = untouched && moved && std::abs(am - bn_clean_) <= 0.15 && std::abs(as - bn_clean_) <= 0.15;
  v.detail = std::string("untouched component bitwise=") + (untouched ? "yes" : "no") +
             " rectified component moved=" + (moved ? "yes" : "no") + " clean acc: none=" + pct(bn_clean_) +
             " mean_only=" + pct(am) + " var_only=" + pct(as) + " (within 15) | gaussian_noise:3 mean_only=" +
             pct(gm) + " var_only=" + pct(gs) + " both=" + pct(g3_acc_star_);
  return v;
}

Verdict Acceptance::ac6() {
  bool partitions_ok = true;
  std::ostringstream os;
  auto check = [&](const ModelGraph& m) {
    const BnPartition p = partition_bn_layers(m);
    std::vector<std::string> joined = p.front;
    joined.insert(joined.end(), p.middle.begin(), p.middle.end());
    joined.insert(joined.end(), p.end.begin(), p.end.end());
    const std::set<std::string> unique(joined.begin(), joined.end());
    partitions_ok = partitions_ok && joined == m.bn_layer_names() && unique.size() == joined.size();
    os << m.bn_layer_names().size() << "->(" << p.front.size() << "," << p.middle.size() << ","
       << p.end.size() << ") ";
  };
  check(*bn_);
  for (int layers : {9, 10, 1}) {
    ModelBuilder b({1, 4, 4}, 2, 1);
    for (int i = 0; i < layers; ++i) b.conv("c" + std::to_string(i), 2, 3, 1, 1).batch_norm("b" + std::to_string(i));
    check(b.global_avg_pool("gap").classifier("fc").build(NormFlavor::kBatch));
  }
  AdaptationPolicy end = default_policy();
  end.layers = LayerScope::kEnd;
  const ModelGraph a = rectify_from_pool(*bn_, cell(CorruptionKind::kGaussianNoise, 3), end, kAdaptSeed).model;
  const BnPartition p = partition_bn_layers(*bn_);
  const std::set<std::string> in_end(p.end.begin(), p.end.end());
  bool exclusive = a.weights_fingerprint() == bn_->weights_fingerprint();
  for (const auto& name : bn_->bn_layer_names()) {
    const BNState& o = bn_->batch_norm(name).state;
    const BNState& n = a.batch_norm(name).state;
    const bool same = n.pop_mean == o.pop_mean && n.pop_var == o.pop_var;
    exclusive = exclusive && (in_end.count(name) ? !same : same) && n.gamma == o.gamma && n.beta == o.beta;
  }
  Verdict v;
  v.pass = partitions_ok && exclusive;
  v.detail = "partitions " + os.str() + (partitions_ok ? "disjoint+exhaustive" : "BROKEN") +
             "; end-third rectify changes only {" + p.end.front() + "}: " + (exclusive ? "yes" : "no");
  return v;
}

Verdict Acceptance::ac7() {
  // Unadapted and adapted grids for tiny-cnn-bn; ref-baseline grid as the
  // CE denominator.
  std::vector<CorruptedCell> grid;
  for (CorruptionKind k : all_corruption_kinds()) {
    for (int s = 1; s <= kNumSeverities; ++s) grid.push_back({k, s, cell(k, s)});
  }
  const auto t0 = Clock::now();
  const EvalResult ref = evaluate(*ref_, grid, test_);
  const EvalResult plain = evaluate(*bn_, grid, test_);
  EvalOptions opt;
  opt.policy = default_policy();
  opt.seed = kAdaptSeed;
  const EvalResult adapted = evaluate(*bn_, grid, test_, opt);
  std::cerr << "grid evaluation " << fmt("%.1f", seconds_since(t0)) << "s\n";

  const EvalReport self = make_report(plain.table, &plain.table);
  bool self_ok = self.ce.size() == all_corruption_kinds().size();
  for (const auto& [k, ce] : self.ce) self_ok = self_ok && ce == 100.0;

  const std::vector<double> m = {0.2, 0.3, 0.4, 0.5, 0.6}, b = {0.4, 0.5, 0.6, 0.7, 0.8};
  const double hand = corruption_error(m, b);

  const EvalReport rp = make_report(plain.table, &ref.table);
  const EvalReport ra = make_report(adapted.table, &ref.table);
  double sum = 0;
  for (const auto& [k, ce] : rp.ce) sum += ce;
  const double mce_gap = std::abs(rp.mce - sum / static_cast<double>(rp.ce.size()));

  write_error_table(ref.table, out_ / "ref-baseline.errors.csv");
  io::write_file(out_ / "tiny-cnn-bn.errors.csv",
                 error_table_csv(plain.table) + error_table_csv(adapted.table, false));
  const double clean_star =
      accuracy(rectify_from_pool(*bn_, test_, default_policy(), kAdaptSeed).model, test_);
  io::write_file(out_ / "tiny-cnn-bn.summary.json", summary_json(rp, ra, bn_clean_, clean_star));

  Verdict v;
  v.pass = self_ok && std::abs(hand - 66.7) <= 0.05 && mce_gap <= 1e-9;
  v.detail = std::string("self-baseline CE=100.0 on all 10: ") + (self_ok ? "yes" : "no") +
             " hand case=" + fmt("%.4f", hand) + " (66.7+-0.05) |mCE-mean(CE)|=" + fmt("%.1e", mce_gap) +
             " | vs ref-baseline: mCE=" + fmt("%.1f", rp.mce) + " mCE*=" + fmt("%.1f", ra.mce) +
             " Acc=" + pct(rp.accuracy) + " Acc*=" + pct(ra.accuracy);
  return v;
}

Verdict Acceptance::ac8() {
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  const StatDistance cc = average_stat_distance(*bn_, test_, test_, kProbeLayer, 32, 100, kAdaptSeed);
  const StatDistance cx = average_stat_distance(*bn_, test_, g3, kProbeLayer, 32, 100, kAdaptSeed);
  const bool a = cx.mean > cc.mean && cx.variance > cc.variance;

  const auto idx = draw_without_replacement(test_.size(), 32, kAdaptSeed + 1);
  std::vector<Tensor> corrupted;
  std::vector<ModelGraph> adapted;
  for (int s = 1; s <= kNumSeverities; ++s) {
    const RawDataset& c = cell(CorruptionKind::kGaussianNoise, s);
    corrupted.push_back(to_tensor(c, idx));
    adapted.push_back(rectify_from_pool(*bn_, c, default_policy(),
                                        cell_seed(kAdaptSeed, CorruptionKind::kGaussianNoise, s)).model);
  }
  const auto curve = severity_similarity_curve(*bn_, adapted, to_tensor(test_, idx), corrupted, kProbeLayer);
  write_similarity_csv(curve, out_ / "similarity_gaussian_noise.csv");
  const bool b = curve[5].unadapted < curve[1].unadapted;
  const bool c = curve[5].adapted >= curve[5].unadapted;
  Verdict v;
  v.pass = a && b && c;
  v.detail = "layer " + kProbeLayer + " (a) stat distance clean-vs-clean mean=" + fmt("%.4f", cc.mean) +
             " var=" + fmt("%.4f", cc.variance) + " clean-vs-gaussian_noise:3 mean=" + fmt("%.4f", cx.mean) +
             " var=" + fmt("%.4f", cx.variance) + (a ? " ok" : " FAIL") + " (b) cos unadapted s1=" +
             fmt("%.3f", curve[1].unadapted) + " s5=" + fmt("%.3f", curve[5].unadapted) + (b ? " ok" : " FAIL") +
             " (c) s5 adapted=" + fmt("%.3f", curve[5].adapted) + (c ? " ok" : " FAIL");
  return v;
}

// Naive-loop forward oracles for every layer kind.
std::size_t forward_oracle_failures(std::size_t& cases) {
  using bnrect::testing::random_tensor;
  using bnrect::testing::random_vec;
  RngStream rng(0xac9, 0);
  std::size_t bad = 0;
  auto close = [&](double got, double want) {
    if (!(std::abs(got - want) <= 1e-5 * std::max(1.0, std::abs(want)))) ++bad;
  };
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.uniform_int(hi - lo + 1)); };
  for (int t = 0; t < 120; ++t, ++cases) {
    const int k = pick(1, 3), stride = pick(1, 2), pad = pick(0, k - 1);
    const Tensor x = random_tensor({pick(1, 3), pick(1, 4), pick(k, 9), pick(k, 9)}, rng);
    const Tensor w = random_tensor({pick(1, 5), x.c(), k, k}, rng);
    const std::vector<float> bias = t % 2 ? random_vec(w.n(), rng) : std::vector<float>{};
    const Tensor want = bnrect::testing::naive_conv(x, w, bias, stride, pad);
    const Tensor got = conv2d(x, w, bias, stride, pad);
    if (got.shape() != want.shape()) { ++bad; continue; }
    for (std::size_t i = 0; i < got.size(); ++i) close(got[i], want[i]);
  }
  for (int t = 0; t < 120; ++t, ++cases) {
    const int k = pick(1, 3);
    const Tensor x = random_tensor({pick(1, 3), pick(1, 4), k * pick(1, 4), k * pick(1, 4)}, rng);
    const Tensor r = relu(x);
    for (std::size_t i = 0; i < x.size(); ++i) close(r[i], std::max(0.0f, x[i]));
    const Tensor p = avgpool2d(x, k);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c)
        for (int i = 0; i < x.h() / k; ++i)
          for (int j = 0; j < x.w() / k; ++j) {
            double s = 0;
            for (int u = 0; u < k; ++u)
              for (int v = 0; v < k; ++v) s += x.at(n, c, i * k + u, j * k + v);
            close(p.at(n, c, i, j), s / (k * k));
          }
    const Tensor g = global_avg_pool(x);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        double s = 0;
        for (float v : x.plane(n, c)) s += v;
        close(g.at(n, c, 0, 0), s / (x.h() * x.w()));
      }
    const int d = x.c() * x.h() * x.w();
    const Tensor w = random_tensor({pick(1, 6), d, 1, 1}, rng);
    const std::vector<float> b = random_vec(w.n(), rng);
    const Tensor y = dense(x, w, b);
    for (int n = 0; n < x.n(); ++n)
      for (int o = 0; o < w.n(); ++o) {
        double s = b[o];
        for (int i = 0; i < d; ++i) s += static_cast<double>(x[n * d + i]) * w[o * d + i];
        close(y[n * w.n() + o], s);
      }
  }
  for (int t = 0; t < 120; ++t, ++cases) {
    const int groups = pick(1, 3);
    const Tensor x = random_tensor({pick(2, 4), groups * pick(1, 3), pick(1, 5), pick(1, 5)}, rng, -2.0f, 3.0f);
    const int C = x.c(), HW = x.h() * x.w();
    BNState s = BNState::fresh(C);
    s.gamma = random_vec(C, rng, 0.5f, 1.5f);
    s.beta = random_vec(C, rng);
    s.pop_mean = random_vec(C, rng);
    s.pop_var = random_vec(C, rng, 0.2f, 2.0f);
    const auto st = bnrect::testing::naive_channel_stats(x);
    const BnTrainResult tr = bn_forward_train(x, s);
    const Tensor ev = bn_forward_eval(x, s);
    const Tensor in = in_forward(x, s.gamma, s.beta, s.epsilon);
    const Tensor gn = gn_forward(x, groups, s.gamma, s.beta, s.epsilon);
    for (int n = 0; n < x.n(); ++n) {
      std::vector<double> im(C, 0), iv(C, 0);
      for (int c = 0; c < C; ++c) {
        for (float v : x.plane(n, c)) im[c] += v;
        im[c] /= HW;
        for (float v : x.plane(n, c)) iv[c] += (v - im[c]) * (v - im[c]);
        iv[c] /= HW;
      }
      const int per = C / groups;
      for (int c = 0; c < C; ++c) {
        const int g0 = (c / per) * per;
        double gm = 0, gv = 0;
        for (int q = g0; q < g0 + per; ++q) gm += im[q];
        gm /= per;
        for (int q = g0; q < g0 + per; ++q) gv += iv[q] + (im[q] - gm) * (im[q] - gm);
        gv /= per;
        for (int i = 0; i < x.h(); ++i)
          for (int j = 0; j < x.w(); ++j) {
            const double v = x.at(n, c, i, j);
            close(tr.y.at(n, c, i, j), s.gamma[c] * (v - st.mean[c]) / std::sqrt(st.var[c] + s.epsilon) + s.beta[c]);
            close(ev.at(n, c, i, j), s.gamma[c] * (v - s.pop_mean[c]) / std::sqrt(s.pop_var[c] + static_cast<double>(s.epsilon)) + s.beta[c]);
            close(in.at(n, c, i, j), s.gamma[c] * (v - im[c]) / std::sqrt(iv[c] + s.epsilon) + s.beta[c]);
            close(gn.at(n, c, i, j), s.gamma[c] * (v - gm) / std::sqrt(gv + s.epsilon) + s.beta[c]);
          }
      }
    }
  }
  return bad;
}

Verdict Acceptance::ac9() {
  std::ostringstream os;
  // Gradient check over every trainable entry of a fresh tiny-cnn-bn.
  const auto t0 = Clock::now();
  const ModelGraph fresh = build_preset("tiny-cnn-bn", {3, 8, 8}, kClasses, kDataSeed);
  RngStream rng(0xac9, 1);
  const Tensor x = bnrect::testing::random_tensor({4, 3, 8, 8}, rng, 0.0f, 1.0f);
  const std::vector<int> labels = {0, 3, 6, 9};
  const GradCheckReport gc = grad_check(fresh, x, labels);
  const bool grad_ok = gc.max_rel_error <= 1e-3 && gc.passed();
  os << "grad_check max_rel=" << fmt("%.2e", gc.max_rel_error) << " over " << gc.checked << " entries ("
     << gc.skipped_kinks << " kinks skipped, " << fmt("%.0f", seconds_since(t0)) << "s)";

  std::size_t cases = 0;
  const std::size_t oracle_bad = forward_oracle_failures(cases);
  os << "; forward oracles " << cases << " cases, " << oracle_bad << " mismatches";

  save_model(*bn_, out_ / "roundtrip-a");
  const ModelGraph back = load_model(out_ / "roundtrip-a");
  save_model(back, out_ / "roundtrip-b");
  const Tensor probe = to_tensor(test_, 0, 64);
  const bool rt = back.fingerprint() == bn_->fingerprint() &&
                  io::read_file(out_ / "roundtrip-a.blob") == io::read_file(out_ / "roundtrip-b.blob") &&
                  io::read_file(out_ / "roundtrip-a.manifest") == io::read_file(out_ / "roundtrip-b.manifest") &&
                  bitwise_equal(predict(*bn_, probe), predict(back, probe));
  os << "; save/load bitwise=" << (rt ? "yes" : "no");

  bool det = true, range = true;
  for (CorruptionKind k : all_corruption_kinds()) {
    for (int s = 1; s <= kNumSeverities; ++s) {
      for (std::size_t i = 0; i < 10; ++i) {
        const Tensor img = image_tensor(test_, i);
        const CorruptionSpec spec{k, s, image_seed({k, s, kCorruptSeed}, i)};
        const Tensor a = apply_corruption(img, spec);
        det = det && bitwise_equal(a, apply_corruption(img, spec));
        for (float v : a.data()) range = range && v >= 0.0f && v <= 1.0f;
      }
    }
  }
  bool mono = true;
  for (CorruptionKind k : {CorruptionKind::kGaussianNoise, CorruptionKind::kShotNoise,
                           CorruptionKind::kImpulseNoise, CorruptionKind::kContrast}) {
    double prev = k == CorruptionKind::kContrast ? 1e300 : -1.0;
    for (int s = 1; s <= kNumSeverities; ++s) {
      double total = 0;
      for (std::size_t i = 0; i < 100; ++i) {
        const Tensor img = image_tensor(test_, i);
        const Tensor out = apply_corruption(img, {k, s, image_seed({k, s, kCorruptSeed}, i)});
        if (k == CorruptionKind::kContrast) {
          double m = 0, q = 0;
          for (float v : out.data()) m += v;
          m /= out.size();
          for (float v : out.data()) q += (v - m) * (v - m);
          total += q / out.size();
        } else {
          double q = 0;
          for (std::size_t j = 0; j < img.size(); ++j) q += (out[j] - img[j]) * (out[j] - img[j]);
          total += q / img.size();
        }
      }
      mono = mono && (k == CorruptionKind::kContrast ? total < prev : total > prev);
      prev = total;
    }
  }
  os << "; corruptions deterministic=" << (det ? "yes" : "no") << " in-range=" << (range ? "yes" : "no")
     << " monotone=" << (mono ? "yes" : "no");
  Verdict v;
  v.pass = grad_ok && oracle_bad == 0 && cases >= 100 && rt && det && range && mono;
  v.detail = os.str();
  return v;
}

Verdict Acceptance::ac10() {
  // Noisy inputs converge more slowly; with the default epoch count the
  // weights are still moving and the moving-average statistics trail them.
  const CorruptionSpec aug{CorruptionKind::kGaussianNoise, 3, 0xa6};
  const ModelGraph ub = train_preset("tiny-cnn-bn", aug, 2 * TrainConfig{}.epochs).model;
  const RawDataset& g3 = cell(CorruptionKind::kGaussianNoise, 3);
  const double a_ub = accuracy(ub, g3);
  Verdict v;
  v.pass = a_ub > g3_acc_star_ && g3_acc_star_ > g3_acc_;
  v.detail = "gaussian_noise:3 Acc_UB=" + pct(a_ub) + " > Acc*=" + pct(g3_acc_star_) + " > Acc=" + pct(g3_acc_) +
             " (augmented-model clean acc " + pct(accuracy(ub, test_)) + ")";
  return v;
}

Verdict Acceptance::ac11() {
  Verdict v;
  v.pass = true;
  std::ostringstream os;
  std::vector<CorruptedCell> grid;
  for (CorruptionKind k : all_corruption_kinds()) {
    for (int s = 1; s <= kNumSeverities; ++s) grid.push_back({k, s, cell(k, s)});
  }
  for (const char* preset : {"tiny-cnn-gn", "tiny-cnn-in"}) {
    const ModelGraph m = train_preset(preset).model;
    const EvalResult r = evaluate(m, grid, test_);
    write_error_table(r.table, out_ / (std::string(preset) + ".errors.csv"));
    bool rejected = false;
    std::string why;
    try {
      rectify_from_pool(m, cell(CorruptionKind::kGaussianNoise, 3), default_policy(), kAdaptSeed);
    } catch (const SemanticError& e) {
      why = e.what();
      rejected = why.find("no batch-norm statistics") != std::string::npos;
    }
    const bool ok = r.clean_accuracy >= 0.85 && r.table.cells.size() == grid.size() && rejected;
    v.pass = v.pass && ok;
    os << preset << " clean_acc=" << pct(r.clean_accuracy) << " (>=85) grid Acc="
       << pct(1.0 - r.table.mean_error()) << " rectify rejected=" << (rejected ? "yes" : "no") << "; ";
    if (rejected) os << "diagnostic: \"" << why << "\"; ";
  }
  v.detail = os.str();
  return v;
}

int Acceptance::run() {
  fs::create_directories(out_);
  prepare_data();
  std::cerr << "data ready [" << fmt("%.1f", seconds_since(start_)) << "s]\n";

  std::map<int, Verdict> results;
  auto guarded = [&](int k, const std::function<Verdict()>& fn) {
    const auto t0 = Clock::now();
    try {
      results[k] = fn();
    } catch (const std::exception& e) {
      results[k] = {false, std::string("exception: ") + e.what()};
    }
    std::cerr << "AC" << k << " " << (results[k].pass ? "PASS" : "FAIL") << " ("
              << fmt("%.1f", seconds_since(t0)) << "s)\n";
  };
  guarded(1, [&] { return ac1(); });
  if (!bn_) {
    std::cout << "AC1 FAIL " << results[1].detail << "\n";
    return 1;
  }
  guarded(2, [&] { return ac2(); });
  guarded(3, [&] { return ac3(); });
  guarded(4, [&] { return ac4(); });
  guarded(5, [&] { return ac5(); });
  guarded(6, [&] { return ac6(); });
  guarded(8, [&] { return ac8(); });
  guarded(7, [&] {
    ref_ = train_preset("ref-baseline").model;
    return ac7();
  });
  guarded(9, [&] { return ac9(); });
  guarded(10, [&] { return ac10(); });
  guarded(11, [&] { return ac11(); });

  int failed = 0;
  std::ostringstream report;
  for (const auto& [k, v] : results) {
    report << "AC" << k << " " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << "\n";
    failed += v.pass ? 0 : 1;
  }
  report << "acceptance: " << (results.size() - failed) << "/" << results.size() << " passed in "
         << fmt("%.0f", seconds_since(start_)) << "s\n";
  std::cout << report.str();
  io::write_file(out_ / "acceptance.txt", report.str());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  try {
    return Acceptance(out).run();
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }
}
