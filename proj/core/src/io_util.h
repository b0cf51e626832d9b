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

// Small file and text helpers shared by the serializers.

#ifndef BNRECT_SRC_IO_UTIL_H_
#define BNRECT_SRC_IO_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bnrect::io {

std::string read_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view bytes);

void append_u16(std::string& out, std::uint16_t v);
void append_u32(std::string& out, std::uint32_t v);
std::uint16_t read_u16(std::string_view bytes, std::size_t offset);
std::uint32_t read_u32(std::string_view bytes, std::size_t offset);

// Shortest representation that parses back to the same float.
std::string format_float(float v);
std::string format_double(double v);

// Parsers throw FormatError naming `what`.
int parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);
float parse_float(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
std::vector<int> parse_int_list(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Replaces CR/LF so a value fits on one manifest line.
std::string sanitize_line(std::string_view text);

}  // namespace bnrect::io

#endif  // BNRECT_SRC_IO_UTIL_H_
