#pragma once

#include <cstdint>
#include <random>

namespace ubtrack {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent deterministic sub-stream for (seed, index, frame) so that
// per-particle / per-track work is reproducible regardless of evaluation order.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t frame = 0) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(index ^ splitmix64(frame)));
  return std::mt19937_64(s);
}

}  // namespace ubtrack
