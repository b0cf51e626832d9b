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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "bnrect/errors.h"
#include "bnrect/model.h"
#include "bnrect/serialize.h"
#include "io_util.h"
#include "test_util.h"

namespace bnrect {
namespace {

using testing::random_tensor;
using testing::toy_three_bn;

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bnrect_model_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(PresetTest, ArchitecturesByConstruction) {
  const ModelGraph bn = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 1);
  const std::vector<std::string> want = {"bn1", "bn2", "bn3"};
  EXPECT_EQ(bn.bn_layer_names(), want);
  EXPECT_EQ(bn.output_shape(bn.index_of("conv1")).c, 16);
  EXPECT_EQ(bn.output_shape(bn.index_of("conv2")).c, 32);
  EXPECT_EQ(bn.output_shape(bn.index_of("conv3")).c, 64);
  EXPECT_EQ(layer_kind(bn.layers().back()), "dense");

  const ModelGraph ref = build_preset("ref-baseline", {3, 16, 16}, 10, 1);
  EXPECT_EQ(ref.bn_layer_names().size(), 2u);
  EXPECT_EQ(ref.output_shape(ref.index_of("conv2")).c, 16);
  EXPECT_EQ(ref.index_of("conv3"), -1);
  EXPECT_LT(ref.parameter_count(), bn.parameter_count());

  const ModelGraph gn = build_preset("tiny-cnn-gn", {3, 16, 16}, 10, 1);
  EXPECT_EQ(gn.flavor(), NormFlavor::kGroup);
  EXPECT_TRUE(gn.bn_layer_names().empty());
  const ModelGraph in = build_preset("tiny-cnn-in", {3, 16, 16}, 10, 1);
  EXPECT_EQ(in.flavor(), NormFlavor::kInstance);
  EXPECT_EQ(layer_kind(in.layers()[1]), "in");
}

TEST(PresetTest, UnknownPresetRejected) {
  EXPECT_THROW(build_preset("resnet50", {3, 16, 16}, 10, 1), SemanticError);
}

TEST(PresetTest, SameSeedSameWeights) {
  const ModelGraph a = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 7);
  const ModelGraph b = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 7);
  const ModelGraph c = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 8);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(blob_bytes(a), blob_bytes(b));
  EXPECT_NE(a.weights_fingerprint(), c.weights_fingerprint());
}

TEST(PresetTest, HeFanInInitialization) {
  const ModelGraph m = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 3);
  const auto& conv = std::get<ConvLayer>(m.layers()[m.index_of("conv3")]);
  double s = 0, ss = 0;
  for (float v : conv.weight.data()) {
    s += v;
    ss += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(conv.weight.size());
  const double mean = s / n, var = ss / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(2.0 / 288.0 / n));
  EXPECT_NEAR(var / (2.0 / 288.0), 1.0, 0.05);
  EXPECT_TRUE(conv.bias.empty());
}

TEST(PresetTest, FreshModelOnZerosGivesFiniteLogits) {
  for (const std::string& name : preset_names()) {
    const ModelGraph m = build_preset(name, {3, 16, 16}, 10, 1);
    const Tensor logits = predict(m, Tensor(Shape{2, 3, 16, 16}));
    EXPECT_EQ(logits.shape(), (Shape{2, 10, 1, 1})) << name;
    EXPECT_TRUE(logits.all_finite()) << name;
  }
}

TEST(BuilderTest, RejectsInvalidGraphs) {
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("a", 2, 3, 1, 1).conv("a", 2, 3, 1, 1)
                   .global_avg_pool("g").classifier("fc").build(NormFlavor::kBatch),
               SemanticError);
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("c", 2, 3, 1, 1).global_avg_pool("g")
                   .classifier("fc").build(NormFlavor::kBatch),
               SemanticError);
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("c", 2, 5, 1, 0).batch_norm("b")
                   .global_avg_pool("g").classifier("fc").build(NormFlavor::kBatch),
               ShapeError);
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("c", 3, 3, 1, 1).group_norm("g", 2)
                   .global_avg_pool("gap").classifier("fc").build(NormFlavor::kGroup),
               ShapeError);
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("c", 2, 3, 1, 1).batch_norm("b")
                   .global_avg_pool("gap").build(NormFlavor::kBatch),
               SemanticError);
  EXPECT_THROW(ModelBuilder({1, 4, 4}, 2, 1).conv("input", 2, 3, 1, 1).batch_norm("b")
                   .global_avg_pool("gap").classifier("fc").build(NormFlavor::kBatch),
               SemanticError);
}

TEST(ForwardTest, EvalIsPureAndLeavesModelUntouched) {
  RngStream rng(11, 0);
  const ModelGraph m = toy_three_bn(3);
  const Tensor x = random_tensor({4, 2, 8, 8}, rng, 0.0f, 1.0f);
  const std::uint64_t before = m.fingerprint();
  const ForwardResult a = forward(m, x);
  const ForwardResult b = forward(m, x);
  EXPECT_TRUE(bitwise_equal(a.logits, b.logits));
  EXPECT_FALSE(a.model.has_value());
  EXPECT_EQ(m.fingerprint(), before);
}

TEST(ForwardTest, TapsCaptureLayerOutputs) {
  RngStream rng(11, 1);
  const ModelGraph m = toy_three_bn(3);
  const Tensor x = random_tensor({3, 2, 8, 8}, rng, 0.0f, 1.0f);
  ForwardOptions opt;
  opt.taps = {"fc", "p2", std::string(kInputTap), "b1"};
  const ForwardResult r = forward(m, x, opt);
  ASSERT_EQ(r.taps.size(), 4u);
  EXPECT_EQ(r.taps[0].layer, "fc");
  EXPECT_TRUE(bitwise_equal(r.taps[0].activation, r.logits));
  EXPECT_EQ(r.taps[1].activation.shape(), (Shape{3, 6, 4, 4}));
  EXPECT_TRUE(bitwise_equal(r.taps[2].activation, x));
  const ImageShape s = m.output_shape(m.index_of("b1"));
  EXPECT_EQ(r.taps[3].activation.shape(), (Shape{3, s.c, s.h, s.w}));
  EXPECT_EQ(input_tap_for(m, "b1"), "c1");
  EXPECT_EQ(input_tap_for(m, "c1"), kInputTap);
}

TEST(ForwardTest, RejectsBadRequests) {
  const ModelGraph m = toy_three_bn(3);
  ForwardOptions opt;
  opt.taps = {"nope"};
  EXPECT_THROW(forward(m, Tensor(Shape{1, 2, 8, 8}), opt), SemanticError);
  EXPECT_THROW(forward(m, Tensor(Shape{1, 3, 8, 8})), ShapeError);
  EXPECT_THROW(forward(m, Tensor(Shape{1, 2, 9, 8})), ShapeError);
  ForwardOptions bad;
  bad.adapt["b1"] = StatComponents::kBoth;
  EXPECT_THROW(forward(m, Tensor(Shape{2, 2, 8, 8}), bad), SemanticError);
  bad.mode = ForwardMode::kAdapt;
  bad.adapt["c1"] = StatComponents::kBoth;
  EXPECT_THROW(forward(m, Tensor(Shape{2, 2, 8, 8}), bad), SemanticError);
}

TEST(ForwardTest, TrainUpdatesOnlyPopulationStats) {
  RngStream rng(11, 2);
  const ModelGraph m = toy_three_bn(4);
  ForwardOptions opt;
  opt.mode = ForwardMode::kTrain;
  const ForwardResult r = forward(m, random_tensor({4, 2, 8, 8}, rng), opt);
  ASSERT_TRUE(r.model.has_value());
  EXPECT_EQ(r.model->weights_fingerprint(), m.weights_fingerprint());
  EXPECT_NE(r.model->fingerprint(), m.fingerprint());
}

// Train mode with momentum 1 copies each layer's batch statistics into the
// population. Eval on the same batch then sees the same input at layer k
// (induction hypothesis), so the same stats, so the same output.
TEST(ForwardTest, MomentumOneTrainThenEvalMatchesLayerwise) {
  RngStream rng(11, 3);
  for (int trial = 0; trial < 5; ++trial) {
    ModelGraph m = toy_three_bn(20 + trial);
    for (const std::string& name : m.bn_layer_names()) {
      m.mutable_batch_norm(name).state.momentum = 1.0f;
    }
    const Tensor x = random_tensor({6, 2, 8, 8}, rng, 0.0f, 1.0f);
    ForwardOptions opt;
    opt.mode = ForwardMode::kTrain;
    for (const Layer& l : m.layers()) opt.taps.push_back(layer_name(l));
    const ForwardResult tr = forward(m, x, opt);
    ForwardOptions ev;
    ev.taps = opt.taps;
    const ForwardResult er = forward(*tr.model, x, ev);
    ASSERT_EQ(tr.taps.size(), er.taps.size());
    for (std::size_t i = 0; i < tr.taps.size(); ++i) {
      EXPECT_LE(testing::max_abs_diff(tr.taps[i].activation, er.taps[i].activation), 1e-5)
          << tr.taps[i].layer;
    }
  }
}

TEST(SerializeTest, RoundTripIsBitExact) {
  const fs::path dir = scratch_dir("roundtrip");
  RngStream rng(12, 0);
  ModelGraph m = build_preset("tiny-cnn-bn", {3, 16, 16}, 10, 5);
  // Non-trivial statistics so the check covers them too.
  ForwardOptions opt;
  opt.mode = ForwardMode::kTrain;
  m = *forward(m, random_tensor({8, 3, 16, 16}, rng, 0.0f, 1.0f), opt).model;
  m.mutable_metadata().notes["train"] = "epochs=3;lr=0.02";
  save_model(m, dir / "m");
  const ModelGraph back = load_model(dir / "m.manifest");
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(back.metadata().notes, m.metadata().notes);
  EXPECT_EQ(back.metadata().preset, "tiny-cnn-bn");
  save_model(back, dir / "again");
  EXPECT_EQ(io::read_file(dir / "m.manifest"), io::read_file(dir / "again.manifest"));
  EXPECT_EQ(io::read_file(dir / "m.blob"), io::read_file(dir / "again.blob"));
  const Tensor x = random_tensor({3, 3, 16, 16}, rng, 0.0f, 1.0f);
  EXPECT_TRUE(bitwise_equal(predict(m, x), predict(back, x)));
}

TEST(SerializeTest, AllFlavorsRoundTrip) {
  for (const std::string& name : preset_names()) {
    const ModelGraph m = build_preset(name, {1, 8, 8}, 4, 2);
    const ModelGraph back = parse_model(manifest_text(m), blob_bytes(m));
    EXPECT_EQ(back.fingerprint(), m.fingerprint()) << name;
    EXPECT_EQ(back.flavor(), m.flavor()) << name;
    EXPECT_EQ(manifest_text(back), manifest_text(m)) << name;
  }
}

TEST(SerializeTest, BlobIsLittleEndianFloatsInVisitOrder) {
  const ModelGraph m = toy_three_bn(9);
  const std::string blob = blob_bytes(m);
  std::vector<float> flat;
  m.visit_parameters([&](const ParamInfo&, std::span<const float> v) {
    flat.insert(flat.end(), v.begin(), v.end());
  });
  ASSERT_EQ(blob.size(), flat.size() * 4);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data() + 4 * i);
    const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t{p[3]} << 24);
    float f;
    std::memcpy(&f, &u, 4);
    ASSERT_EQ(std::memcmp(&f, &flat[i], 4), 0) << i;
  }
}

std::string error_of(const std::string& manifest, const std::string& blob) {
  try {
    parse_model(manifest, blob);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(SerializeTest, DistinctDiagnostics) {
  const ModelGraph m = toy_three_bn(9);
  const std::string man = manifest_text(m);
  const std::string blob = blob_bytes(m);
  EXPECT_NE(error_of(man, blob.substr(0, blob.size() - 4)).find("blob length mismatch"),
            std::string::npos);
  EXPECT_NE(error_of(man, blob + "abcd").find("blob length mismatch"), std::string::npos);
  std::string bad_magic = man;
  bad_magic.replace(0, 6, "xxxxxx");
  EXPECT_NE(error_of(bad_magic, blob).find("magic mismatch"), std::string::npos);
  std::string bad_version = man;
  const auto nl = bad_version.find('\n');
  bad_version.replace(0, nl, std::string(kManifestMagic) + " 99");
  EXPECT_NE(error_of(bad_version, blob).find("version"), std::string::npos);
  std::string nan_blob = blob;
  const float nan = std::nanf("");
  std::memcpy(nan_blob.data() + 8, &nan, 4);
  EXPECT_NE(error_of(man, nan_blob).find("non-finite"), std::string::npos);
}

TEST(SerializeTest, MissingFileIsIoError) {
  EXPECT_THROW(load_model(fs::temp_directory_path() / "bnrect_no_such_model"), IoError);
}

}  // namespace
}  // namespace bnrect
