#pragma once

#include <cstdint>
#include <random>

namespace fransim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based sub-seed: the stream for (seed, index) depends only on the
/// pair, never on how many other streams were drawn before it.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

// Stream tags, so that different consumers of one user seed never overlap.
enum class StreamTag : std::uint64_t {
  kCounts = 1,
  kMonteCarlo = 2,
  kJitter = 3,
  kRandomState = 4,
  kSweep = 5,
};

constexpr std::uint64_t tagged_seed(std::uint64_t seed, StreamTag tag) noexcept {
  return derive_seed(seed, 0xfeedULL, static_cast<std::uint64_t>(tag));
}

}  // namespace fransim
