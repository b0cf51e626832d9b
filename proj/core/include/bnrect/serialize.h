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

#ifndef BNRECT_SERIALIZE_H_
#define BNRECT_SERIALIZE_H_

#include <filesystem>
#include <string>

#include "bnrect/model.h"

namespace bnrect {

inline constexpr const char* kManifestMagic = "bnrect-model";
inline constexpr int kManifestVersion = 1;

// A model is stored as two files sharing a basename:
//   <base>.manifest  UTF-8, line-oriented key=value with [layer ...] blocks
//                    listing hyperparameters and the parameter order;
//   <base>.blob      raw little-endian float32 values concatenated in the
//                    order the manifest lists them.
// `base` may carry either extension; it is stripped.
void save_model(const ModelGraph& model, const std::filesystem::path& base);

// Throws FormatError ("manifest magic mismatch", "unsupported manifest
// version", "blob length mismatch", "non-finite parameter") or IoError.
ModelGraph load_model(const std::filesystem::path& base);

std::string manifest_text(const ModelGraph& model);
std::string blob_bytes(const ModelGraph& model);
ModelGraph parse_model(const std::string& manifest, const std::string& blob);

std::filesystem::path model_base(const std::filesystem::path& path);

}  // namespace bnrect

#endif  // BNRECT_SERIALIZE_H_
