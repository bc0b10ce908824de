// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cutmixsl {

/// Purpose-specific stream ids. Every random draw in the system belongs to
/// exactly one stream, so results do not depend on call interleaving between
/// purposes.
enum class Stream : std::uint32_t {
  kMasks = 1,
  kAllocations = 2,
  kShuffles = 3,
  kNoise = 4,
  kInit = 5,
  kGrouping = 6,
  kData = 7,
  kAttack = 8,
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator. The 64-bit seed is the Philox key; the 128-bit
/// counter is (block, stream, substream_lo, substream_hi). Each block yields
/// two 64-bit outputs consumed low word first.
///
/// Derived draws (consumption order is part of the reproducibility contract):
///   uniform()      one u64, top 53 bits scaled to [0, 1)
///   below(n)       u64 draws rejected while r < (2^64 - n) mod n, then r mod n
///   normal()       two uniform(); Box-Muller cosine branch, no caching
///   gamma(a)       Marsaglia-Tsang; a < 1 boosts with gamma(a + 1) then one uniform()
///   binomial(n, p) n uniform() Bernoulli trials; p <= 0 or p >= 1 consumes nothing
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0);

  std::uint64_t next_u64();
  double uniform();
  std::uint64_t below(std::uint64_t n);
  double normal();
  double gamma(double shape);
  std::uint64_t binomial(std::uint64_t n, double p);

  /// Fisher-Yates, drawing below(i + 1) for i = n-1 .. 1.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::uint32_t> permutation(std::size_t n);

  std::uint64_t seed() const { return seed_; }
  Stream stream() const { return stream_; }
  std::uint64_t substream() const { return substream_; }

 private:
  void refill();

  std::uint64_t seed_;
  Stream stream_;
  std::uint64_t substream_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

}  // namespace cutmixsl
