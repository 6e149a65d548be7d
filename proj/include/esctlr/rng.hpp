#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

// Hand-rolled deterministic RNG helpers. std::mt19937/std::normal_distribution
// are not bit-stable across standard library implementations, and the log
// format promises byte-identical reruns, so we keep the whole noise path
// under our control.
namespace esctlr::rng {

struct Splitmix64 {
  std::uint64_t state{0};

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

/// Uniform double in (0, 1]; never returns 0 so it is safe under log().
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

/// One standard-normal draw via Box-Muller (cosine branch).
double gaussian(Splitmix64& stream);

/// Mixes a stream id into a seed so independent consumers get
/// non-overlapping substreams from one scenario seed.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  Splitmix64 s{seed ^ (salt * 0x9E3779B97F4A7C15ull)};
  return s.next();
}

/// FNV-1a 64-bit, used for scenario hashes in log metadata.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace esctlr::rng
