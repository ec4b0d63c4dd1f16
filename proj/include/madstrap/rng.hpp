#pragma once

// Counter-based random streams.
//
// This file is part of the reproducibility contract: the bit patterns below
// are frozen, and every sample, resample and replicate seed in the library is
// derived from them.
//
//   mix64(z):   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//               z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//               return z ^ (z >> 31)
//
//   stream(key), draw i = 1, 2, ...:
//               next_i = mix64(key + i * 0x9e3779b97f4a7c15)      (mod 2^64)
//
//   uniform01:  ((next >> 11) + 0.5) * 2^-53                      in (0, 1)
//   bounded(n): (next * n) >> 64   (128-bit product, no rejection)
//
//   hash64(w_1, ..., w_k):
//               h = 0x6a09e667f3bcc909
//               for each w: h = mix64(h ^ mix64(w + 0x9e3779b97f4a7c15))
//
// The stream is SplitMix64 viewed as a function of (key, counter), so any
// draw can be produced independently of the others.

#include <cstdint>
#include <initializer_list>

namespace madstrap {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash64(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w + kGoldenGamma));
  return h;
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  constexpr double uniform01() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t bounded(std::uint64_t n) noexcept {
    const unsigned __int128 product = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::uint64_t>(product >> 64);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace madstrap
