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

#include "bnrect/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "bnrect/errors.h"
#include "bnrect/rng.h"
#include "io_util.h"

namespace bnrect {

void RawDataset::validate() const {
  if (shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
    throw ShapeError("dataset has empty image extents");
  }
  if (pixels.size() != labels.size() * image_bytes()) {
    throw ShapeError("dataset holds " + std::to_string(pixels.size()) +
                     " pixel bytes for " + std::to_string(labels.size()) +
                     " labels of " + std::to_string(image_bytes()) + " bytes each");
  }
}

std::string encode_images(const RawDataset& ds) {
  ds.validate();
  std::string out(kImagesMagic, 5);
  io::append_u32(out, static_cast<std::uint32_t>(ds.size()));
  io::append_u32(out, static_cast<std::uint32_t>(ds.shape.c));
  io::append_u32(out, static_cast<std::uint32_t>(ds.shape.h));
  io::append_u32(out, static_cast<std::uint32_t>(ds.shape.w));
  out.append(reinterpret_cast<const char*>(ds.pixels.data()), ds.pixels.size());
  return out;
}

std::string encode_labels(const RawDataset& ds) {
  std::string out(kLabelsMagic, 5);
  io::append_u32(out, static_cast<std::uint32_t>(ds.size()));
  for (std::uint16_t l : ds.labels) io::append_u16(out, l);
  return out;
}

RawDataset decode_images(const std::string& images, const std::string& where) {
  if (images.size() < 21 || images.compare(0, 5, kImagesMagic) != 0) {
    throw FormatError(where + ": images file lacks RSET1 magic");
  }
  RawDataset ds;
  const std::uint32_t count = io::read_u32(images, 5);
  const std::uint32_t c = io::read_u32(images, 9);
  const std::uint32_t h = io::read_u32(images, 13);
  const std::uint32_t w = io::read_u32(images, 17);
  if (c == 0 || h == 0 || w == 0 || c > 4096 || h > 65536 || w > 65536) {
    throw FormatError(where + ": implausible image extents in header");
  }
  ds.shape = ImageShape{static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)};
  const std::uint64_t bytes = static_cast<std::uint64_t>(count) * c * h * w;
  if (images.size() != 21 + bytes) {
    throw FormatError(where + ": images file length " + std::to_string(images.size()) +
                      " does not match header (" + std::to_string(21 + bytes) + ")");
  }
  ds.pixels.assign(images.begin() + 21, images.end());
  ds.labels.assign(count, 0);
  return ds;
}

RawDataset decode_dataset(const std::string& images, const std::string& labels,
                          const std::string& where) {
  RawDataset ds = decode_images(images, where);
  if (labels.size() < 9 || labels.compare(0, 5, kLabelsMagic) != 0) {
    throw FormatError(where + ": labels file lacks RLBL1 magic");
  }
  const std::size_t count = ds.size();
  const std::uint32_t label_count = io::read_u32(labels, 5);
  if (label_count != count) {
    throw ShapeError(where + ": " + std::to_string(count) + " images but " +
                     std::to_string(label_count) + " labels");
  }
  if (labels.size() != 9 + 2 * count) {
    throw FormatError(where + ": labels file length does not match header");
  }
  for (std::size_t i = 0; i < count; ++i) ds.labels[i] = io::read_u16(labels, 9 + 2 * i);
  return ds;
}

void write_dataset(const RawDataset& ds, const std::filesystem::path& images,
                   const std::filesystem::path& labels) {
  io::write_file(images, encode_images(ds));
  io::write_file(labels, encode_labels(ds));
}

RawDataset read_dataset(const std::filesystem::path& images,
                        const std::filesystem::path& labels) {
  return decode_dataset(io::read_file(images), io::read_file(labels),
                        images.string());
}

RawDataset read_images(const std::filesystem::path& images) {
  return decode_images(io::read_file(images), images.string());
}

Tensor to_tensor(const RawDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t len = ds.image_bytes();
  Tensor t(Shape{static_cast<int>(indices.size()), ds.shape.c, ds.shape.h, ds.shape.w});
  auto out = t.mutable_data();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= ds.size()) throw ShapeError("dataset index out of range");
    const std::uint8_t* src = ds.pixels.data() + indices[k] * len;
    float* dst = out.data() + k * len;
    for (std::size_t i = 0; i < len; ++i) dst[i] = static_cast<float>(src[i]) / 255.0f;
  }
  return t;
}

Tensor to_tensor(const RawDataset& ds, std::size_t begin, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
  return to_tensor(ds, idx);
}

Tensor image_tensor(const RawDataset& ds, std::size_t index) {
  return to_tensor(ds, index, 1);
}

std::vector<int> labels_of(const RawDataset& ds, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(ds.labels.at(i));
  return out;
}

std::vector<int> labels_of(const RawDataset& ds, std::size_t begin, std::size_t count) {
  std::vector<int> out;
  out.reserve(count);
  for (std::size_t i = begin; i < begin + count; ++i) out.push_back(ds.labels.at(i));
  return out;
}

std::uint8_t quantize_pixel(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void store_image(RawDataset& ds, std::size_t index, const Tensor& image) {
  const std::size_t len = ds.image_bytes();
  if (image.size() != len || image.n() != 1) {
    throw ShapeError("store_image: image " + image.shape().str() +
                     " does not fit dataset slot");
  }
  std::uint8_t* dst = ds.pixels.data() + index * len;
  for (std::size_t i = 0; i < len; ++i) dst[i] = quantize_pixel(image[i]);
}

RawDataset subset(const RawDataset& ds, std::span<const std::size_t> indices) {
  RawDataset out;
  out.shape = ds.shape;
  const std::size_t len = ds.image_bytes();
  out.pixels.resize(indices.size() * len);
  out.labels.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::memcpy(out.pixels.data() + k * len, ds.pixels.data() + indices[k] * len, len);
    out.labels[k] = ds.labels.at(indices[k]);
  }
  return out;
}

int max_label(const RawDataset& ds) {
  int m = -1;
  for (std::uint16_t l : ds.labels) m = std::max<int>(m, l);
  return m;
}

std::vector<std::string> synthetic_class_names() {
  return {"disk",    "square",  "triangle", "plus",    "ring",
          "hstripe", "vstripe", "dstripe",  "checker", "cross"};
}

namespace {

// Coverage in [0, 1] of class `label` at point (x, y).
struct ShapeParams {
  double cx, cy, r, period, phase, angle;
};

bool inside(int label, const ShapeParams& p, double x, double y) {
  const double dx = x - p.cx;
  const double dy = y - p.cy;
  const double ca = std::cos(p.angle), sa = std::sin(p.angle);
  const double u = ca * dx + sa * dy;   // rotated coordinates
  const double v = -sa * dx + ca * dy;
  constexpr double kTwoPi = 6.283185307179586;
  switch (label) {
    case 0: return dx * dx + dy * dy <= p.r * p.r;
    case 1: return std::fabs(u) <= 0.8 * p.r && std::fabs(v) <= 0.8 * p.r;
    case 2: {
      // Upward-pointing triangle in rotated frame.
      const double h = 1.6 * p.r;
      const double top = -0.6 * p.r * 1.33;
      if (v < top || v > top + h) return false;
      const double half = 0.95 * p.r * (v - top) / h;
      return std::fabs(u) <= half;
    }
    case 3: {
      const double t = 0.3 * p.r;
      return (std::fabs(u) <= t && std::fabs(v) <= p.r) ||
             (std::fabs(v) <= t && std::fabs(u) <= p.r);
    }
    case 4: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= p.r * p.r && d2 >= 0.3 * p.r * p.r;
    }
    case 5: return std::sin(kTwoPi * y / p.period + p.phase) > 0.0;
    case 6: return std::sin(kTwoPi * x / p.period + p.phase) > 0.0;
    case 7: return std::sin(kTwoPi * (x + y) / (1.4142 * p.period) + p.phase) > 0.0;
    case 8: {
      const double s = std::sin(kTwoPi * x / p.period + p.phase) *
                       std::sin(kTwoPi * y / p.period + p.phase);
      return s > 0.0;
    }
    case 9: {
      const double t = 0.25 * p.r;
      const double a = (dx - dy) * 0.70710678;
      const double b = (dx + dy) * 0.70710678;
      return (std::fabs(a) <= t || std::fabs(b) <= t) && std::fabs(dx) <= 0.75 * p.r &&
             std::fabs(dy) <= 0.75 * p.r;
    }
    default: return false;
  }
}

}  // namespace

RawDataset make_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                  ImageShape shape) {
  RawDataset ds;
  ds.shape = shape;
  ds.pixels.resize(count * ds.image_bytes());
  ds.labels.resize(count);
  const int hw = std::min(shape.h, shape.w);
  Tensor img(Shape{1, shape.c, shape.h, shape.w});
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % kSyntheticClasses);
    RngStream rng(seed, i);
    std::vector<double> bg(shape.c), fg(shape.c);
    // Redraw colors until foreground and background differ enough in mean
    // intensity for the shape to be visible.
    for (;;) {
      double db = 0.0;
      for (int c = 0; c < shape.c; ++c) {
        bg[c] = 0.1 + 0.8 * rng.uniform();
        fg[c] = 0.1 + 0.8 * rng.uniform();
        db += fg[c] - bg[c];
      }
      if (std::fabs(db) / shape.c >= 0.2) break;
    }
    ShapeParams p;
    p.r = hw * (0.2 + 0.12 * rng.uniform());
    p.cx = shape.w * 0.5 + (rng.uniform() - 0.5) * (shape.w - 2.2 * p.r);
    p.cy = shape.h * 0.5 + (rng.uniform() - 0.5) * (shape.h - 2.2 * p.r);
    p.period = hw * (0.15 + 0.1 * rng.uniform());
    p.phase = 6.283185307179586 * rng.uniform();
    p.angle = (rng.uniform() - 0.5) * 0.6;
    const double gx = (rng.uniform() - 0.5) * 0.1;  // faint background ramp
    const double gy = (rng.uniform() - 0.5) * 0.1;
    for (int y = 0; y < shape.h; ++y) {
      for (int x = 0; x < shape.w; ++x) {
        int hits = 0;
        for (int sy = 0; sy < 2; ++sy) {
          for (int sx = 0; sx < 2; ++sx) {
            hits += inside(label, p, x + 0.25 + 0.5 * sx, y + 0.25 + 0.5 * sy) ? 1 : 0;
          }
        }
        const double a = hits / 4.0;
        const double ramp = gx * (x - shape.w * 0.5) / shape.w + gy * (y - shape.h * 0.5) / shape.h;
        for (int c = 0; c < shape.c; ++c) {
          const double jitter = (rng.uniform() - 0.5) * 0.04;
          img.at(0, c, y, x) = static_cast<float>(bg[c] * (1.0 - a) + fg[c] * a + ramp + jitter);
        }
      }
    }
    store_image(ds, i, img);
    ds.labels[i] = static_cast<std::uint16_t>(label);
  }
  return ds;
}

}  // namespace bnrect
