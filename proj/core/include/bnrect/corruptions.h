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

#ifndef BNRECT_CORRUPTIONS_H_
#define BNRECT_CORRUPTIONS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bnrect/dataset.h"
#include "bnrect/tensor.h"

namespace bnrect {

enum class CorruptionKind {
  kGaussianNoise,
  kShotNoise,
  kImpulseNoise,
  kDefocusBlur,
  kGlassBlur,
  kMotionBlur,
  kZoomBlur,
  kContrast,
  kBrightness,
  kPixelate,
};

inline constexpr int kNumCorruptionKinds = 10;
inline constexpr int kNumSeverities = 5;

std::string_view to_string(CorruptionKind kind);
// Throws SemanticError for names outside the supported set.
CorruptionKind parse_corruption_kind(std::string_view name);
const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds();
bool is_noise(CorruptionKind kind);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;  // 1..5
  std::uint64_t seed = 0;
};

// "kind:severity", e.g. "gaussian_noise:3".
CorruptionSpec parse_corruption_spec(std::string_view text, std::uint64_t seed = 0);

using SeverityValues = std::array<double, kNumSeverities>;

// Per-kind parameter tuples for severities 1..5. Each kind has one
// designated strength parameter that must be strictly monotone:
//   gaussian_noise.sigma      increasing   shot_noise.lambda    decreasing
//   impulse_noise.prob        increasing   defocus_blur.radius  increasing
//   glass_blur.sigma          increasing   motion_blur.length   increasing
//   zoom_blur.max_zoom        increasing   contrast.factor      decreasing
//   brightness.offset         increasing   pixelate.factor      increasing
// glass_blur.iterations is a non-decreasing positive integer.
class SeverityTable {
 public:
  static const SeverityTable& defaults();

  // Text format: one "<kind>.<param>=v1,v2,v3,v4,v5" per line, '#'
  // comments. Entries override the defaults; the result is validated.
  static SeverityTable parse(std::string_view text);
  static SeverityTable load(const std::filesystem::path& path);
  std::string to_text() const;

  double value(CorruptionKind kind, std::string_view param, int severity) const;
  const SeverityValues& values(CorruptionKind kind, std::string_view param) const;
  // Unchecked override (validate() is not called), e.g. zero-strength tests.
  void set(CorruptionKind kind, std::string_view param, SeverityValues values);

  // Throws SemanticError when a designated parameter is not strictly
  // monotone in the documented direction.
  void validate() const;

 private:
  std::map<std::string, SeverityValues, std::less<>> entries_;  // "kind.param"
};

struct CorruptOptions {
  bool clip = true;  // clamp the result to [0, 1]
};

// Corrupts a [1,C,H,W] image with values in [0, 1]. The random draws come
// from RngStream(spec.seed, stream), so (spec, stream) fixes the output.
Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec,
                        std::uint64_t stream = 0,
                        const SeverityTable& table = SeverityTable::defaults(),
                        CorruptOptions options = {});

// Seed used for image `index` of a corrupted dataset:
// spec.seed XOR hash(kind, severity, index).
std::uint64_t image_seed(const CorruptionSpec& spec, std::size_t index);

// Corrupts every image (8-bit re-quantized); labels are copied unchanged.
RawDataset corrupt_dataset(const RawDataset& clean, const CorruptionSpec& spec,
                           const SeverityTable& table = SeverityTable::defaults());

struct CorruptedCell {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;
  RawDataset data;
};

std::vector<CorruptedCell> corrupt_grid(
    const RawDataset& clean, const std::vector<CorruptionKind>& kinds,
    const std::vector<int>& severities, std::uint64_t seed,
    const SeverityTable& table = SeverityTable::defaults());

// Files are named <kind>-<severity>.rset / .rlbl.
std::filesystem::path cell_images_path(const std::filesystem::path& dir,
                                       CorruptionKind kind, int severity);
std::filesystem::path cell_labels_path(const std::filesystem::path& dir,
                                       CorruptionKind kind, int severity);
void write_cell(const std::filesystem::path& dir, const CorruptedCell& cell);
// Reads every cell present in `dir`, ordered by (kind, severity).
std::vector<CorruptedCell> read_corrupted_dir(const std::filesystem::path& dir);

}  // namespace bnrect

#endif  // BNRECT_CORRUPTIONS_H_
