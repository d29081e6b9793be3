#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slope {

using Rng = std::mt19937_64;

// One SplitMix64 step; advances `state` and returns a whitened word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

//! Stream seed for (master, label, index). Pure function of its inputs, so
//! parallel work items can derive their own streams in any execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s ^= fnv1a64(label);
  std::uint64_t b = splitmix64(s);
  s ^= index + 0x2545f4914f6cdd1dULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + 0x632be59bd9b4e019ULL) ^ c;
}

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

//! Uniform draw in [0,1) that consumes exactly one engine word.
inline double uniform01(Rng& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

}  // namespace slope
