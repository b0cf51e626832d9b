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

#ifndef BNRECT_RNG_H_
#define BNRECT_RNG_H_

#include <array>
#include <cstdint>
#include <initializer_list>

namespace bnrect {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Maps a 128-bit counter and 64-bit key to 128 bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// Mixes a list of 64-bit words into one (splitmix64 finalizer chain). Used to
// derive seeds and stream ids from structured coordinates such as
// (epoch, sample index).
std::uint64_t mix64(std::initializer_list<std::uint64_t> words);

// Deterministic stream of random variates. The key is the seed; the counter
// is (block index, stream id), so streams with distinct ids never overlap
// and can be consumed in any order or in parallel.
class RngStream {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10";

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound);
  // Standard normal via Box-Muller; the second variate of each pair is
  // cached.
  double normal();
  // Poisson(lambda). Multiplication method below 10, PTRS above.
  std::int64_t poisson(double lambda);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace bnrect

#endif  // BNRECT_RNG_H_
