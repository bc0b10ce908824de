// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace cutmixsl::mixer {

/// batch x tokens x dim activations, row-major.
struct TokenGrid {
  std::size_t batch = 0;
  std::size_t tokens = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  static TokenGrid zeros(std::size_t batch, std::size_t tokens, std::size_t dim);
  std::size_t row_size() const { return dim; }
  float* row(std::size_t b, std::size_t j) { return values.data() + (b * tokens + j) * dim; }
  const float* row(std::size_t b, std::size_t j) const { return values.data() + (b * tokens + j) * dim; }
  bool operator==(const TokenGrid&) const = default;
};

/// Binary token selector of length M; bit j set means token j is transmitted.
struct PatchMask {
  std::vector<std::uint8_t> bits;

  static PatchMask full(std::size_t m);
  static PatchMask empty(std::size_t m);
  std::size_t size() const { return bits.size(); }
  std::size_t popcount() const;
  /// Bit j of the result is token j. Requires size() <= 64.
  std::uint64_t to_u64() const;
  static PatchMask from_u64(std::uint64_t word, std::size_t m);
  bool operator==(const PatchMask&) const = default;
};

struct MixAllocation {
  std::vector<std::uint32_t> counts;

  std::size_t k() const { return counts.size(); }
  std::uint64_t total() const;
  bool operator==(const MixAllocation&) const = default;
};

/// One mask per group member, in member order.
struct MaskSet {
  std::vector<PatchMask> masks;

  /// Throws ProtocolError naming the first position claimed twice or by no
  /// member, DimensionError on a length mismatch.
  void validate(std::size_t m) const;
};

struct MixGroup {
  std::vector<std::uint32_t> members;  // client ids
  MixAllocation allocation;
  MaskSet mask_set;

  std::size_t k() const { return members.size(); }
};

struct CutSmashed {
  TokenGrid tokens;  // untransmitted rows are zero
  PatchMask mask;
  std::uint32_t client_id = 0;
};

struct CutMixBatch {
  TokenGrid tokens;
  std::size_t num_classes = 0;
  std::vector<float> soft_label;  // batch x num_classes
  MixGroup group;
};

}  // namespace cutmixsl::mixer
