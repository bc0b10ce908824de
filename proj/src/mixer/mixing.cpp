// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/mixer/mixer.hpp"

namespace cutmixsl::mixer {

namespace {

bool same_shape(const TokenGrid& a, const TokenGrid& b) {
  return a.batch == b.batch && a.tokens == b.tokens && a.dim == b.dim;
}

}  // namespace

CutMixBatch cutmix_assemble(const std::vector<CutSmashed>& parts, const std::vector<std::vector<float>>& labels,
                            const MixAllocation& allocation, std::size_t m) {
  if (parts.empty()) throw ContractError("cutmix_assemble: no parts");
  if (labels.size() != parts.size() || allocation.k() != parts.size()) {
    throw DimensionError("cutmix_assemble: " + std::to_string(parts.size()) + " parts, " +
                         std::to_string(labels.size()) + " labels, " + std::to_string(allocation.k()) + " counts");
  }
  const TokenGrid& first = parts[0].tokens;
  if (first.tokens != m) throw DimensionError("cutmix_assemble: parts have " + std::to_string(first.tokens) + " rows");
  const std::size_t batch = first.batch;
  const std::size_t classes = batch ? labels[0].size() / batch : 0;
  std::vector<int> owner(m, -1);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (!same_shape(p.tokens, first) || p.mask.size() != m) {
      throw DimensionError("cutmix_assemble: part from client " + std::to_string(p.client_id) + " has another shape");
    }
    if (labels[i].size() != batch * classes) {
      throw DimensionError("cutmix_assemble: label size " + std::to_string(labels[i].size()) + " for client " +
                           std::to_string(p.client_id));
    }
    if (p.mask.popcount() != allocation.counts[i]) {
      throw ProtocolError("cutmix_assemble: client " + std::to_string(p.client_id) + " mask has " +
                          std::to_string(p.mask.popcount()) + " tokens, allocation " +
                          std::to_string(allocation.counts[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (!p.mask.bits[j]) continue;
      if (owner[j] >= 0) {
        throw ProtocolError("cutmix_assemble: position " + std::to_string(j) + " claimed by clients " +
                            std::to_string(parts[owner[j]].client_id) + " and " + std::to_string(p.client_id));
      }
      owner[j] = static_cast<int>(i);
    }
  }

  CutMixBatch out;
  out.tokens = TokenGrid::zeros(batch, m, first.dim);
  out.num_classes = classes;
  out.soft_label.assign(batch * classes, 0.0f);
  // Masks are disjoint, so the row sum is a copy from the unique owner.
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < m; ++j) {
      if (owner[j] < 0) continue;
      const float* src = parts[owner[j]].tokens.row(b, j);
      std::copy(src, src + first.dim, out.tokens.row(b, j));
    }
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const float w = static_cast<float>(allocation.counts[i]) / static_cast<float>(m);
    for (std::size_t e = 0; e < out.soft_label.size(); ++e) out.soft_label[e] += w * labels[i][e];
  }
  for (const auto& p : parts) out.group.members.push_back(p.client_id);
  out.group.allocation = allocation;
  for (const auto& p : parts) out.group.mask_set.masks.push_back(p.mask);
  return out;
}

ShuffledBatch shuffle_tokens(const CutMixBatch& batch, Rng& rng) {
  ShuffledBatch out{batch, {}};
  const auto& in = batch.tokens;
  for (std::size_t b = 0; b < in.batch; ++b) {
    auto perm = rng.permutation(in.tokens);
    for (std::size_t j = 0; j < in.tokens; ++j) std::copy_n(in.row(b, perm[j]), in.dim, out.batch.tokens.row(b, j));
    out.permutations.push_back(std::move(perm));
  }
  return out;
}

TokenGrid unshuffle_tokens(const TokenGrid& shuffled, const std::vector<std::vector<std::uint32_t>>& permutations) {
  if (permutations.size() != shuffled.batch) throw DimensionError("unshuffle_tokens: permutation count mismatch");
  TokenGrid out = shuffled;
  for (std::size_t b = 0; b < shuffled.batch; ++b) {
    for (std::size_t j = 0; j < shuffled.tokens; ++j) {
      std::copy_n(shuffled.row(b, j), shuffled.dim, out.row(b, permutations[b][j]));
    }
  }
  return out;
}

TokenGrid manifold_mixup(const TokenGrid& s_i, const TokenGrid& s_j, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("manifold_mixup: lambda outside [0, 1]");
  if (!same_shape(s_i, s_j)) throw DimensionError("manifold_mixup: grid shapes differ");
  TokenGrid out = s_i;
  const float l = static_cast<float>(lambda), r = static_cast<float>(1.0 - lambda);
  for (std::size_t e = 0; e < out.values.size(); ++e) out.values[e] = l * s_i.values[e] + r * s_j.values[e];
  return out;
}

std::vector<float> mix_labels(std::span<const float> y_i, std::span<const float> y_j, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("mix_labels: lambda outside [0, 1]");
  if (y_i.size() != y_j.size()) throw DimensionError("mix_labels: label sizes differ");
  std::vector<float> out(y_i.size());
  const float l = static_cast<float>(lambda), r = static_cast<float>(1.0 - lambda);
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = l * y_i[e] + r * y_j[e];
  return out;
}

TokenGrid add_gaussian_noise(const TokenGrid& tokens, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ContractError("add_gaussian_noise: negative sigma");
  TokenGrid out = tokens;
  if (sigma == 0.0) return out;
  for (auto& v : out.values) v += static_cast<float>(sigma * rng.normal());
  return out;
}

std::vector<float> add_label_noise(std::span<const float> labels, std::size_t num_classes, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ContractError("add_label_noise: negative sigma");
  if (num_classes == 0 || labels.size() % num_classes != 0) throw DimensionError("add_label_noise: bad label size");
  std::vector<float> out(labels.begin(), labels.end());
  if (sigma == 0.0) return out;
  for (std::size_t r = 0; r < labels.size() / num_classes; ++r) {
    std::vector<double> row(num_classes);
    double mass = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      row[c] = std::max(0.0, labels[r * num_classes + c] + sigma * rng.normal());
      mass += row[c];
    }
    if (mass <= 0.0) continue;
    for (std::size_t c = 0; c < num_classes; ++c) out[r * num_classes + c] = static_cast<float>(row[c] / mass);
  }
  return out;
}

}  // namespace cutmixsl::mixer
