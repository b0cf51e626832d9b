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

#include <sstream>

#include "bnrect/corruptions.h"
#include "bnrect/errors.h"
#include "io_util.h"

namespace bnrect {
namespace {

struct Strength {
  CorruptionKind kind;
  const char* param;
  bool increasing;
};

constexpr Strength kStrengths[] = {
    {CorruptionKind::kGaussianNoise, "sigma", true},
    {CorruptionKind::kShotNoise, "lambda", false},
    {CorruptionKind::kImpulseNoise, "prob", true},
    {CorruptionKind::kDefocusBlur, "radius", true},
    {CorruptionKind::kGlassBlur, "sigma", true},
    {CorruptionKind::kMotionBlur, "length", true},
    {CorruptionKind::kZoomBlur, "max_zoom", true},
    {CorruptionKind::kContrast, "factor", false},
    {CorruptionKind::kBrightness, "offset", true},
    {CorruptionKind::kPixelate, "factor", true},
};

std::string key_of(CorruptionKind kind, std::string_view param) {
  return std::string(to_string(kind)) + "." + std::string(param);
}

SeverityTable make_defaults() {
  SeverityTable t;
  t.set(CorruptionKind::kGaussianNoise, "sigma", {0.08, 0.12, 0.18, 0.26, 0.38});
  t.set(CorruptionKind::kShotNoise, "lambda", {60, 40, 25, 20, 16});
  t.set(CorruptionKind::kImpulseNoise, "prob", {0.03, 0.06, 0.09, 0.17, 0.27});
  t.set(CorruptionKind::kDefocusBlur, "radius", {1.0, 1.5, 2.0, 2.5, 3.0});
  t.set(CorruptionKind::kGlassBlur, "sigma", {0.5, 0.7, 0.9, 1.1, 1.5});
  t.set(CorruptionKind::kGlassBlur, "iterations", {1, 1, 2, 2, 3});
  t.set(CorruptionKind::kMotionBlur, "length", {3, 5, 7, 9, 11});
  t.set(CorruptionKind::kZoomBlur, "max_zoom", {1.04, 1.06, 1.08, 1.10, 1.12});
  t.set(CorruptionKind::kContrast, "factor", {0.75, 0.5, 0.4, 0.3, 0.15});
  t.set(CorruptionKind::kBrightness, "offset", {0.1, 0.2, 0.3, 0.4, 0.5});
  t.set(CorruptionKind::kPixelate, "factor", {1.5, 2.0, 2.5, 3.0, 4.0});
  t.validate();
  return t;
}

}  // namespace

const SeverityTable& SeverityTable::defaults() {
  static const SeverityTable table = make_defaults();
  return table;
}

void SeverityTable::set(CorruptionKind kind, std::string_view param,
                        SeverityValues values) {
  entries_[key_of(kind, param)] = values;
}

const SeverityValues& SeverityTable::values(CorruptionKind kind,
                                            std::string_view param) const {
  const auto it = entries_.find(key_of(kind, param));
  if (it == entries_.end()) {
    throw SemanticError("severity table has no entry " + key_of(kind, param));
  }
  return it->second;
}

double SeverityTable::value(CorruptionKind kind, std::string_view param,
                            int severity) const {
  if (severity < 1 || severity > kNumSeverities) {
    throw SemanticError("severity " + std::to_string(severity) + " outside [1, 5]");
  }
  return values(kind, param)[severity - 1];
}

void SeverityTable::validate() const {
  for (const Strength& s : kStrengths) {
    const SeverityValues& v = values(s.kind, s.param);
    for (int i = 1; i < kNumSeverities; ++i) {
      const bool ok = s.increasing ? v[i] > v[i - 1] : v[i] < v[i - 1];
      if (!ok) {
        throw SemanticError("severity table " + key_of(s.kind, s.param) + " must be strictly " +
                            (s.increasing ? "increasing" : "decreasing"));
      }
    }
  }
  const SeverityValues& it = values(CorruptionKind::kGlassBlur, "iterations");
  for (int i = 0; i < kNumSeverities; ++i) {
    if (it[i] < 1 || it[i] != static_cast<int>(it[i]) || (i > 0 && it[i] < it[i - 1])) {
      throw SemanticError("glass_blur.iterations must be non-decreasing positive integers");
    }
  }
  if (values(CorruptionKind::kShotNoise, "lambda")[kNumSeverities - 1] <= 0.0) {
    throw SemanticError("shot_noise.lambda must stay positive");
  }
  if (values(CorruptionKind::kPixelate, "factor")[0] < 1.0) {
    throw SemanticError("pixelate.factor must be >= 1");
  }
}

SeverityTable SeverityTable::parse(std::string_view text) {
  SeverityTable t = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string uncommented = line.substr(0, line.find('#'));
    const std::string_view body = io::trim(uncommented);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto dot = body.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
      throw FormatError("severity table line " + std::to_string(line_no) +
                        ": expected <kind>.<param>=v1,...,v5");
    }
    const std::string key(io::trim(body.substr(0, eq)));
    if (t.entries_.find(key) == t.entries_.end()) {
      throw FormatError("severity table line " + std::to_string(line_no) +
                        ": unknown entry '" + key + "'");
    }
    const std::vector<double> vals = io::parse_double_list(body.substr(eq + 1), key);
    if (vals.size() != kNumSeverities) {
      throw FormatError("severity table line " + std::to_string(line_no) +
                        ": expected 5 values for " + key);
    }
    SeverityValues arr;
    std::copy(vals.begin(), vals.end(), arr.begin());
    t.entries_[key] = arr;
  }
  t.validate();
  return t;
}

SeverityTable SeverityTable::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

std::string SeverityTable::to_text() const {
  std::ostringstream os;
  os << "# <kind>.<param>=severity1,...,severity5\n";
  for (const auto& [key, v] : entries_) {
    os << key << '=';
    for (int i = 0; i < kNumSeverities; ++i) {
      os << (i ? "," : "") << io::format_double(v[i]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace bnrect
