#pragma once

#include <cstdint>
#include <random>

namespace dnls {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent Mersenne-Twister stream for (seed, stream), seeded through splitmix64.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    const auto v = splitmix64(x);
    words[2 * i] = static_cast<std::uint32_t>(v);
    words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(words, words + 8);
  return std::mt19937_64(seq);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace dnls
