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

#include "bnrect/corruptions.h"

#include <algorithm>
#include <cmath>

#include "bnrect/errors.h"
#include "bnrect/rng.h"

namespace bnrect {
namespace {

constexpr std::array<CorruptionKind, kNumCorruptionKinds> kAllKinds = {
    CorruptionKind::kGaussianNoise, CorruptionKind::kShotNoise,
    CorruptionKind::kImpulseNoise,  CorruptionKind::kDefocusBlur,
    CorruptionKind::kGlassBlur,     CorruptionKind::kMotionBlur,
    CorruptionKind::kZoomBlur,      CorruptionKind::kContrast,
    CorruptionKind::kBrightness,    CorruptionKind::kPixelate,
};

// Symmetric reflection: -1 -> 0, n -> n-1.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Bilinear sample of one channel plane with reflected borders.
float bilinear(const float* plane, int h, int w, double y, double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const int y0 = static_cast<int>(fy);
  const int x0 = static_cast<int>(fx);
  const double ty = y - fy;
  const double tx = x - fx;
  auto px = [&](int yy, int xx) {
    return static_cast<double>(plane[reflect(yy, h) * w + reflect(xx, w)]);
  };
  const double top = px(y0, x0) * (1.0 - tx) + px(y0, x0 + 1) * tx;
  const double bot = px(y0 + 1, x0) * (1.0 - tx) + px(y0 + 1, x0 + 1) * tx;
  return static_cast<float>(top * (1.0 - ty) + bot * ty);
}

struct Tap {
  int dy;
  int dx;
  float weight;
};

Tensor convolve_reflect(const Tensor& img, const std::vector<Tap>& taps) {
  Tensor out(img.shape());
  const int h = img.h();
  const int w = img.w();
  for (int c = 0; c < img.c(); ++c) {
    const auto src = img.plane(0, c);
    auto dst = out.mutable_plane(0, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (const Tap& t : taps) {
          acc += t.weight * src[reflect(y + t.dy, h) * w + reflect(x + t.dx, w)];
        }
        dst[y * w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor gaussian_noise(const Tensor& img, double sigma, RngStream& rng) {
  Tensor out = img;
  for (float& v : out.mutable_data()) v = static_cast<float>(v + sigma * rng.normal());
  return out;
}

Tensor shot_noise(const Tensor& img, double lambda, RngStream& rng) {
  Tensor out = img;
  for (float& v : out.mutable_data()) {
    const double rate = std::max(0.0, static_cast<double>(v)) * lambda;
    v = static_cast<float>(static_cast<double>(rng.poisson(rate)) / lambda);
  }
  return out;
}

Tensor impulse_noise(const Tensor& img, double prob, RngStream& rng) {
  Tensor out = img;
  for (float& v : out.mutable_data()) {
    const double u = rng.uniform();
    if (u < prob) v = (u < 0.5 * prob) ? 0.0f : 1.0f;
  }
  return out;
}

Tensor defocus_blur(const Tensor& img, double radius) {
  std::vector<Tap> taps;
  const int r = static_cast<int>(std::ceil(radius));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= radius * radius + 1e-9) taps.push_back({dy, dx, 1.0f});
    }
  }
  const float inv = 1.0f / static_cast<float>(taps.size());
  for (Tap& t : taps) t.weight = inv;
  return convolve_reflect(img, taps);
}

Tensor glass_blur(const Tensor& img, double sigma, int iterations, RngStream& rng) {
  Tensor out = img;
  const int h = img.h();
  const int w = img.w();
  for (int it = 0; it < iterations; ++it) {
    for (int y = h - 1; y >= 0; --y) {
      for (int x = w - 1; x >= 0; --x) {
        const int dy = static_cast<int>(std::lround(sigma * rng.normal()));
        const int dx = static_cast<int>(std::lround(sigma * rng.normal()));
        const int yy = std::clamp(y + dy, 0, h - 1);
        const int xx = std::clamp(x + dx, 0, w - 1);
        for (int c = 0; c < img.c(); ++c) std::swap(out.at(0, c, y, x), out.at(0, c, yy, xx));
      }
    }
  }
  return out;
}

Tensor motion_blur(const Tensor& img, int length, RngStream& rng) {
  const double angle = (rng.uniform() - 0.5) * 3.14159265358979323846;  // [-90, 90) deg
  const double uy = std::sin(angle);
  const double ux = std::cos(angle);
  Tensor out(img.shape());
  const int h = img.h();
  const int w = img.w();
  const double half = 0.5 * (length - 1);
  for (int c = 0; c < img.c(); ++c) {
    const float* src = img.plane(0, c).data();
    auto dst = out.mutable_plane(0, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int s = 0; s < length; ++s) {
          const double t = s - half;
          acc += bilinear(src, h, w, y + t * uy, x + t * ux);
        }
        dst[y * w + x] = static_cast<float>(acc / length);
      }
    }
  }
  return out;
}

Tensor zoom_blur(const Tensor& img, double max_zoom) {
  const int h = img.h();
  const int w = img.w();
  const double cy = 0.5 * (h - 1);
  const double cx = 0.5 * (w - 1);
  std::vector<double> zooms;
  for (int i = 0;; ++i) {
    const double z = 1.0 + 0.02 * i;
    if (z > max_zoom + 1e-9) break;
    zooms.push_back(z);
  }
  Tensor out(img.shape());
  for (int c = 0; c < img.c(); ++c) {
    const float* src = img.plane(0, c).data();
    auto dst = out.mutable_plane(0, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (double z : zooms) acc += bilinear(src, h, w, cy + (y - cy) / z, cx + (x - cx) / z);
        dst[y * w + x] = static_cast<float>(acc / zooms.size());
      }
    }
  }
  return out;
}

Tensor contrast(const Tensor& img, double factor) {
  Tensor out = img;
  for (int c = 0; c < img.c(); ++c) {
    double mean = 0.0;
    for (float v : img.plane(0, c)) mean += v;
    mean /= static_cast<double>(img.shape().plane());
    for (float& v : out.mutable_plane(0, c)) {
      v = static_cast<float>((v - mean) * factor + mean);
    }
  }
  return out;
}

Tensor brightness(const Tensor& img, double offset) {
  Tensor out = img;
  for (float& v : out.mutable_data()) v = static_cast<float>(v + offset);
  return out;
}

Tensor pixelate(const Tensor& img, double factor) {
  const int h = img.h();
  const int w = img.w();
  const int ch = std::max(1, static_cast<int>(std::floor(h / factor)));
  const int cw = std::max(1, static_cast<int>(std::floor(w / factor)));
  Tensor out(img.shape());
  for (int c = 0; c < img.c(); ++c) {
    std::vector<double> sum(static_cast<std::size_t>(ch) * cw, 0.0);
    std::vector<int> cnt(sum.size(), 0);
    const auto src = img.plane(0, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t cell = static_cast<std::size_t>(y * ch / h) * cw + x * cw / w;
        sum[cell] += src[y * w + x];
        ++cnt[cell];
      }
    }
    auto dst = out.mutable_plane(0, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t cell = static_cast<std::size_t>(y * ch / h) * cw + x * cw / w;
        dst[y * w + x] = static_cast<float>(sum[cell] / cnt[cell]);
      }
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kGaussianNoise: return "gaussian_noise";
    case CorruptionKind::kShotNoise: return "shot_noise";
    case CorruptionKind::kImpulseNoise: return "impulse_noise";
    case CorruptionKind::kDefocusBlur: return "defocus_blur";
    case CorruptionKind::kGlassBlur: return "glass_blur";
    case CorruptionKind::kMotionBlur: return "motion_blur";
    case CorruptionKind::kZoomBlur: return "zoom_blur";
    case CorruptionKind::kContrast: return "contrast";
    case CorruptionKind::kBrightness: return "brightness";
    case CorruptionKind::kPixelate: return "pixelate";
  }
  return "unknown";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
  for (CorruptionKind k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  throw SemanticError("unknown corruption kind '" + std::string(name) + "'");
}

const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds() {
  return kAllKinds;
}

bool is_noise(CorruptionKind kind) {
  return kind == CorruptionKind::kGaussianNoise || kind == CorruptionKind::kShotNoise ||
         kind == CorruptionKind::kImpulseNoise;
}

CorruptionSpec parse_corruption_spec(std::string_view text, std::uint64_t seed) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw SemanticError("corruption spec '" + std::string(text) +
                        "' must look like kind:severity");
  }
  CorruptionSpec spec;
  spec.kind = parse_corruption_kind(text.substr(0, colon));
  const std::string sev(text.substr(colon + 1));
  if (sev.size() != 1 || sev[0] < '1' || sev[0] > '5') {
    throw SemanticError("corruption severity '" + sev + "' outside [1, 5]");
  }
  spec.severity = sev[0] - '0';
  spec.seed = seed;
  return spec;
}

Tensor apply_corruption(const Tensor& image, const CorruptionSpec& spec,
                        std::uint64_t stream, const SeverityTable& table,
                        CorruptOptions options) {
  if (image.n() != 1) {
    throw ShapeError("apply_corruption expects a single image, got " + image.shape().str());
  }
  if (spec.severity < 1 || spec.severity > kNumSeverities) {
    throw SemanticError("severity " + std::to_string(spec.severity) + " outside [1, 5]");
  }
  RngStream rng(spec.seed, stream);
  const int s = spec.severity;
  Tensor out;
  switch (spec.kind) {
    case CorruptionKind::kGaussianNoise:
      out = gaussian_noise(image, table.value(spec.kind, "sigma", s), rng);
      break;
    case CorruptionKind::kShotNoise:
      out = shot_noise(image, table.value(spec.kind, "lambda", s), rng);
      break;
    case CorruptionKind::kImpulseNoise:
      out = impulse_noise(image, table.value(spec.kind, "prob", s), rng);
      break;
    case CorruptionKind::kDefocusBlur:
      out = defocus_blur(image, table.value(spec.kind, "radius", s));
      break;
    case CorruptionKind::kGlassBlur:
      out = glass_blur(image, table.value(spec.kind, "sigma", s),
                       static_cast<int>(table.value(spec.kind, "iterations", s)), rng);
      break;
    case CorruptionKind::kMotionBlur:
      out = motion_blur(image, static_cast<int>(table.value(spec.kind, "length", s)), rng);
      break;
    case CorruptionKind::kZoomBlur:
      out = zoom_blur(image, table.value(spec.kind, "max_zoom", s));
      break;
    case CorruptionKind::kContrast:
      out = contrast(image, table.value(spec.kind, "factor", s));
      break;
    case CorruptionKind::kBrightness:
      out = brightness(image, table.value(spec.kind, "offset", s));
      break;
    case CorruptionKind::kPixelate:
      out = pixelate(image, table.value(spec.kind, "factor", s));
      break;
    default:
      throw SemanticError("unknown corruption kind");
  }
  if (options.clip) {
    for (float& v : out.mutable_data()) v = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

std::uint64_t image_seed(const CorruptionSpec& spec, std::size_t index) {
  return spec.seed ^ mix64({static_cast<std::uint64_t>(spec.kind),
                            static_cast<std::uint64_t>(spec.severity), index});
}

RawDataset corrupt_dataset(const RawDataset& clean, const CorruptionSpec& spec,
                           const SeverityTable& table) {
  clean.validate();
  RawDataset out = clean;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CorruptionSpec per_image = spec;
    per_image.seed = image_seed(spec, i);
    store_image(out, i, apply_corruption(image_tensor(clean, i), per_image, 0, table));
  }
  return out;
}

std::vector<CorruptedCell> corrupt_grid(const RawDataset& clean,
                                        const std::vector<CorruptionKind>& kinds,
                                        const std::vector<int>& severities,
                                        std::uint64_t seed, const SeverityTable& table) {
  std::vector<CorruptedCell> cells;
  for (CorruptionKind kind : kinds) {
    for (int sev : severities) {
      cells.push_back({kind, sev, corrupt_dataset(clean, {kind, sev, seed}, table)});
    }
  }
  return cells;
}

std::filesystem::path cell_images_path(const std::filesystem::path& dir,
                                       CorruptionKind kind, int severity) {
  return dir / (std::string(to_string(kind)) + "-" + std::to_string(severity) + ".rset");
}

std::filesystem::path cell_labels_path(const std::filesystem::path& dir,
                                       CorruptionKind kind, int severity) {
  return dir / (std::string(to_string(kind)) + "-" + std::to_string(severity) + ".rlbl");
}

void write_cell(const std::filesystem::path& dir, const CorruptedCell& cell) {
  write_dataset(cell.data, cell_images_path(dir, cell.kind, cell.severity),
                cell_labels_path(dir, cell.kind, cell.severity));
}

std::vector<CorruptedCell> read_corrupted_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("corrupted dataset directory not found: " + dir.string());
  }
  std::vector<CorruptedCell> cells;
  for (CorruptionKind kind : kAllKinds) {
    for (int sev = 1; sev <= kNumSeverities; ++sev) {
      const auto images = cell_images_path(dir, kind, sev);
      if (!std::filesystem::exists(images)) continue;
      cells.push_back({kind, sev, read_dataset(images, cell_labels_path(dir, kind, sev))});
    }
  }
  if (cells.empty()) {
    throw IoError("no <kind>-<severity>.rset files in " + dir.string());
  }
  return cells;
}

}  // namespace bnrect
