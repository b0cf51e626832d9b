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

#ifndef BNRECT_DATASET_H_
#define BNRECT_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bnrect/model.h"
#include "bnrect/tensor.h"

namespace bnrect {

// 8-bit image set with class labels, mirroring the on-disk format:
//   images: "RSET1", u32 count, u32 C, u32 H, u32 W, count*C*H*W u8 (NCHW)
//   labels: "RLBL1", u32 count, count u16 labels
// All integers little-endian.
struct RawDataset {
  ImageShape shape;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint16_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const {
    return static_cast<std::size_t>(shape.c) * shape.h * shape.w;
  }
  // Throws ShapeError when pixel and label counts disagree.
  void validate() const;
};

inline constexpr char kImagesMagic[] = "RSET1";
inline constexpr char kLabelsMagic[] = "RLBL1";

std::string encode_images(const RawDataset& ds);
std::string encode_labels(const RawDataset& ds);
// Throws FormatError with the offending path on bad magic or truncation.
RawDataset decode_dataset(const std::string& images, const std::string& labels,
                          const std::string& where = "dataset");

void write_dataset(const RawDataset& ds, const std::filesystem::path& images,
                   const std::filesystem::path& labels);
RawDataset read_dataset(const std::filesystem::path& images,
                        const std::filesystem::path& labels);
// Images only; every label is 0. For unlabeled pools (adaptation).
RawDataset decode_images(const std::string& images, const std::string& where = "images");
RawDataset read_images(const std::filesystem::path& images);

// Pixels scaled to [0, 1] (value / 255).
Tensor to_tensor(const RawDataset& ds, std::span<const std::size_t> indices);
Tensor to_tensor(const RawDataset& ds, std::size_t begin, std::size_t count);
Tensor image_tensor(const RawDataset& ds, std::size_t index);
std::vector<int> labels_of(const RawDataset& ds, std::span<const std::size_t> indices);
std::vector<int> labels_of(const RawDataset& ds, std::size_t begin, std::size_t count);

// Writes a [1,C,H,W] image into slot `index`, clamping to [0, 1] and
// rounding to the nearest 8-bit level.
void store_image(RawDataset& ds, std::size_t index, const Tensor& image);
std::uint8_t quantize_pixel(float v);

RawDataset subset(const RawDataset& ds, std::span<const std::size_t> indices);

int max_label(const RawDataset& ds);

// Procedural 10-class set of shapes and textures on random backgrounds.
// Class identity is carried by geometry only; colors, position, size and
// phase are nuisance variables. Labels cycle 0..9.
inline constexpr int kSyntheticClasses = 10;
RawDataset make_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                  ImageShape shape = {3, 32, 32});
std::vector<std::string> synthetic_class_names();

}  // namespace bnrect

#endif  // BNRECT_DATASET_H_
