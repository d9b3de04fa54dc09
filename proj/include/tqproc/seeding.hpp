#pragma once

#include <cstdint>

namespace tqproc {

// SplitMix64 finalizer (Steele, Lea & Flood). Every derived seed in the
// project goes through this function so that results depend only on
// (master_seed, index) and never on scheduling.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under `seed`: splitmix64(seed ^ splitmix64(index)).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index));
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_seed(mix_seed(seed, a), b);
}

}  // namespace tqproc
