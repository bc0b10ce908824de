// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <span>
#include <utility>

#include "cutmixsl/mixer/types.hpp"
#include "cutmixsl/rng.hpp"

namespace cutmixsl::mixer {

inline constexpr double kAlphaInfinity = std::numeric_limits<double>::infinity();

/// Dirichlet-multinomial token counts for a k-way group.
///
/// p_i = G_i / sum G with G_i ~ Gamma(alpha) drawn in index order, then the
/// multinomial is decomposed sequentially: a_i ~ Binomial(M - sum_{j<i} a_j,
/// p_i / (1 - sum_{j<i} p_j)) for i < k, a_k takes the rest. alpha = infinity
/// gives the even split with the remainder on the lowest indices and draws
/// nothing; k = 1 also draws nothing.
MixAllocation sample_mixing_counts(std::size_t k, double alpha, std::size_t m, Rng& rng);

/// Shuffles positions 0..M-1 once and hands member i the next a_i of them.
MaskSet generate_mask_set(const MixAllocation& allocation, std::size_t m, Rng& rng);

/// Zeroes rows outside the mask, for every sample, in a copy.
CutSmashed cut(const TokenGrid& tokens, const PatchMask& mask, std::uint32_t client_id = 0);

/// Sums the parts row by row and mixes labels with weights a_i / M.
/// `labels[i]` is batch x num_classes for parts[i].
CutMixBatch cutmix_assemble(const std::vector<CutSmashed>& parts, const std::vector<std::vector<float>>& labels,
                            const MixAllocation& allocation, std::size_t m);

struct ShuffledBatch {
  CutMixBatch batch;
  /// out row j of sample b = in row permutations[b][j]
  std::vector<std::vector<std::uint32_t>> permutations;
};

ShuffledBatch shuffle_tokens(const CutMixBatch& batch, Rng& rng);
TokenGrid unshuffle_tokens(const TokenGrid& shuffled, const std::vector<std::vector<std::uint32_t>>& permutations);

/// lambda s_i + (1 - lambda) s_j.
TokenGrid manifold_mixup(const TokenGrid& s_i, const TokenGrid& s_j, double lambda);
std::vector<float> mix_labels(std::span<const float> y_i, std::span<const float> y_j, double lambda);

enum class CutoutMode { kFixed, kPerIteration };

/// Keeps floor(keep_ratio M + 1/2) random tokens. In fixed mode the first mask
/// drawn is reused for every later call.
class CutoutMasker {
 public:
  CutoutMasker(double keep_ratio, CutoutMode mode, Rng rng);

  PatchMask next(std::size_t m);
  CutSmashed apply(const TokenGrid& tokens, std::uint32_t client_id = 0);
  static std::size_t kept_tokens(double keep_ratio, std::size_t m);

 private:
  double keep_ratio_;
  CutoutMode mode_;
  Rng rng_;
  PatchMask fixed_;
  bool have_fixed_ = false;
};

TokenGrid add_gaussian_noise(const TokenGrid& tokens, double sigma, Rng& rng);

/// Adds N(0, sigma^2) per entry, clips at zero and renormalizes each row of
/// num_classes entries. A row whose mass clips to zero keeps its original
/// value.
std::vector<float> add_label_noise(std::span<const float> labels, std::size_t num_classes, double sigma, Rng& rng);

}  // namespace cutmixsl::mixer
