#pragma once

#include <cstdint>
#include <random>

namespace msgd_lab {

/// SplitMix64 (see https://prng.di.unimi.it); used to derive seeds, not as the stream itself.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Per-run seed: one SplitMix64 output of (base_seed XOR run_index).
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  return SplitMix64(base_seed ^ index)();
}

using Engine = std::mt19937_64;

/// The sample stream for a run: mt19937_64 seeded from the mixed seed.
inline Engine make_engine(std::uint64_t seed) { return Engine(SplitMix64(seed)()); }

}  // namespace msgd_lab
