/*
 * Copyright 2026 The ranksafe authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RANKSAFE_RNG_H_
#define RANKSAFE_RNG_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ranksafe {

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a tag path.
// Per-query and per-interaction streams are derived this way so that
// results never depend on scheduling or iteration order.
inline uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> tags) {
  uint64_t h = SplitMix64(base ^ 0x6a09e667f3bcc909ULL);
  for (uint64_t t : tags) h = SplitMix64(h ^ t);
  return h;
}

// xoshiro256++ seeded through SplitMix64. The <random> engines would do,
// but their distribution adapters are implementation-defined; this keeps
// every stream bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    for (auto& word : state_) {
      seed = SplitMix64(seed);
      word = seed;
    }
  }

  uint64_t NextU64() {
    const uint64_t result = Rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double NextDouble() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe as a log() argument.
  double NextOpenDouble() {
    const double u = NextDouble();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t NextBelow(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(NextU64()) * bound) >> 64);
  }

  // Standard normal via Box-Muller (cosine branch only).
  double NextGaussian() {
    const double u1 = NextOpenDouble();
    const double u2 = NextDouble();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  static uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
};

}  // namespace ranksafe

#endif  // RANKSAFE_RNG_H_
