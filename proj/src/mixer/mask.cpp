// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/mixer/mixer.hpp"

namespace cutmixsl::mixer {

TokenGrid TokenGrid::zeros(std::size_t batch, std::size_t tokens, std::size_t dim) {
  return {batch, tokens, dim, std::vector<float>(batch * tokens * dim, 0.0f)};
}

PatchMask PatchMask::full(std::size_t m) { return {std::vector<std::uint8_t>(m, 1)}; }
PatchMask PatchMask::empty(std::size_t m) { return {std::vector<std::uint8_t>(m, 0)}; }

std::size_t PatchMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::uint64_t PatchMask::to_u64() const {
  if (bits.size() > 64) throw ContractError("PatchMask::to_u64: mask longer than 64");
  std::uint64_t w = 0;
  for (std::size_t j = 0; j < bits.size(); ++j) w |= static_cast<std::uint64_t>(bits[j] & 1u) << j;
  return w;
}

PatchMask PatchMask::from_u64(std::uint64_t word, std::size_t m) {
  if (m > 64) throw ContractError("PatchMask::from_u64: mask longer than 64");
  PatchMask mask = empty(m);
  for (std::size_t j = 0; j < m; ++j) mask.bits[j] = static_cast<std::uint8_t>((word >> j) & 1u);
  return mask;
}

std::uint64_t MixAllocation::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

void MaskSet::validate(std::size_t m) const {
  std::vector<int> owner(m, -1);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].size() != m) {
      throw DimensionError("mask set: mask " + std::to_string(i) + " has length " + std::to_string(masks[i].size()) +
                           ", expected " + std::to_string(m));
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (masks[i].bits[j] > 1) throw ProtocolError("mask set: non-binary entry in mask " + std::to_string(i));
      if (!masks[i].bits[j]) continue;
      if (owner[j] >= 0) {
        throw ProtocolError("mask set: position " + std::to_string(j) + " claimed by members " +
                            std::to_string(owner[j]) + " and " + std::to_string(i));
      }
      owner[j] = static_cast<int>(i);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (owner[j] < 0) throw ProtocolError("mask set: position " + std::to_string(j) + " not covered");
  }
}

MaskSet generate_mask_set(const MixAllocation& allocation, std::size_t m, Rng& rng) {
  if (allocation.total() != m) {
    throw ContractError("generate_mask_set: allocation sums to " + std::to_string(allocation.total()) +
                        ", expected " + std::to_string(m));
  }
  const auto positions = rng.permutation(m);
  MaskSet set;
  std::size_t next = 0;
  for (auto a : allocation.counts) {
    PatchMask mask = PatchMask::empty(m);
    for (std::uint32_t r = 0; r < a; ++r) mask.bits[positions[next++]] = 1;
    set.masks.push_back(std::move(mask));
  }
  return set;
}

CutSmashed cut(const TokenGrid& tokens, const PatchMask& mask, std::uint32_t client_id) {
  if (mask.size() != tokens.tokens) {
    throw DimensionError("cut: mask length " + std::to_string(mask.size()) + " vs " + std::to_string(tokens.tokens) +
                         " token rows");
  }
  CutSmashed out{tokens, mask, client_id};
  for (std::size_t b = 0; b < tokens.batch; ++b) {
    for (std::size_t j = 0; j < tokens.tokens; ++j) {
      if (!mask.bits[j]) std::fill_n(out.tokens.row(b, j), tokens.dim, 0.0f);
    }
  }
  return out;
}

std::size_t CutoutMasker::kept_tokens(double keep_ratio, std::size_t m) {
  return static_cast<std::size_t>(std::floor(keep_ratio * static_cast<double>(m) + 0.5));
}

CutoutMasker::CutoutMasker(double keep_ratio, CutoutMode mode, Rng rng)
    : keep_ratio_(keep_ratio), mode_(mode), rng_(rng) {
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw ContractError("cutout: keep_ratio must lie in (0, 1], got " + std::to_string(keep_ratio));
  }
}

PatchMask CutoutMasker::next(std::size_t m) {
  if (mode_ == CutoutMode::kFixed && have_fixed_ && fixed_.size() == m) return fixed_;
  const std::size_t kept = std::min(kept_tokens(keep_ratio_, m), m);
  const auto positions = rng_.permutation(m);
  PatchMask mask = PatchMask::empty(m);
  for (std::size_t r = 0; r < kept; ++r) mask.bits[positions[r]] = 1;
  if (mode_ == CutoutMode::kFixed) {
    fixed_ = mask;
    have_fixed_ = true;
  }
  return mask;
}

CutSmashed CutoutMasker::apply(const TokenGrid& tokens, std::uint32_t client_id) {
  return cut(tokens, next(tokens.tokens), client_id);
}

}  // namespace cutmixsl::mixer
