// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/rng.hpp"
#include "doctest.h"

using cutmixsl::Rng;
using cutmixsl::Stream;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(cutmixsl::philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(cutmixsl::philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(cutmixsl::philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream outputs are a pure function of (seed, stream, substream)") {
  Rng a(7, Stream::kMasks, 3);
  Rng b(7, Stream::kMasks, 3);
  Rng other_stream(7, Stream::kShuffles, 3);
  Rng other_sub(7, Stream::kMasks, 4);
  bool differs_stream = false;
  bool differs_sub = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_stream |= x != other_stream.next_u64();
    differs_sub |= x != other_sub.next_u64();
  }
  CHECK(differs_stream);
  CHECK(differs_sub);
}

TEST_CASE("integer draws match frozen golden vectors") {
  // Frozen from this implementation after the Philox KAT above passed; any
  // change here breaks cross-run reproducibility of masks and allocations.
  Rng rng(20260101, Stream::kMasks, 0);
  const auto first = rng.next_u64();
  const auto second = rng.next_u64();
  const std::array<std::uint32_t, 4> block =
      cutmixsl::philox4x32({0, 1, 0, 0}, {static_cast<std::uint32_t>(20260101u), 0});
  CHECK(first == ((static_cast<std::uint64_t>(block[1]) << 32) | block[0]));
  CHECK(second == ((static_cast<std::uint64_t>(block[3]) << 32) | block[2]));

  CHECK(first == 0x0efca8cdcf46967cull);
  CHECK(second == 0xe21dce784273fd44ull);

  Rng perm_rng(5, Stream::kShuffles, 11);
  CHECK(perm_rng.permutation(8) == std::vector<std::uint32_t>{0, 6, 4, 5, 2, 1, 7, 3});

  // Recomputed with an independent Python Philox4x32-10.
  Rng u(7, Stream::kNoise, 3);
  CHECK(u.uniform() == 0.9821211819367546);
  CHECK(u.normal() == -0.9862409530194106);
}

TEST_CASE("below is unbiased and in range") {
  Rng rng(1, Stream::kData, 0);
  std::array<int, 6> counts{};
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const auto v = rng.below(6);
    REQUIRE(v < 6);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - draws / 6) < 400);
  CHECK_THROWS_AS(rng.below(0), cutmixsl::ContractError);
}

TEST_CASE("normal and gamma moments") {
  Rng rng(3, Stream::kNoise, 0);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);

  for (double shape : {0.3, 1.0, 6.0}) {
    Rng g(4, Stream::kAllocations, 0);
    double m = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = g.gamma(shape);
      m += x;
      m2 += x * x;
    }
    m /= n;
    const double var = m2 / n - m * m;
    CHECK(std::abs(m - shape) < 0.02 * shape + 0.01);
    CHECK(std::abs(var - shape) < 0.05 * shape + 0.01);
  }
  CHECK_THROWS_AS(rng.gamma(0.0), cutmixsl::ContractError);
}

TEST_CASE("binomial edge probabilities consume nothing") {
  Rng a(9, Stream::kAllocations, 0);
  Rng b(9, Stream::kAllocations, 0);
  CHECK(a.binomial(10, 0.0) == 0);
  CHECK(a.binomial(10, 1.0) == 10);
  CHECK(a.next_u64() == b.next_u64());
}
