#pragma once

#include <cstdint>
#include <random>

namespace spdelab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates consecutive stream indices.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for task `index` of a run seeded with `master_seed`.
/// The stream depends only on (master_seed, index), never on scheduling.
inline Rng stream(std::uint64_t master_seed, std::uint64_t index) {
  return Rng(mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace spdelab
