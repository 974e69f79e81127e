#pragma once

#include <cstdint>
#include <random>

namespace bcgram {

// splitmix64 step; used to decorrelate seeds for derived streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: stream(seed, i) and stream(seed, j) are
// independent for i != j, so parallel replicates stay deterministic and
// order-independent.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(counter + 1)));
}

inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t a,
                                     std::uint64_t b) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(a + 1) ^ mix64(mix64(b + 0x9e37ULL))));
}

}  // namespace bcgram
