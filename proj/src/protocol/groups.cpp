// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/errors.hpp"
#include "cutmixsl/protocol/protocol.hpp"

namespace cutmixsl::protocol {

std::vector<mixer::MixGroup> form_groups(std::span<const std::uint32_t> clients, std::size_t k, Rng& rng) {
  if (clients.empty()) throw ContractError("form_groups: no clients");
  if (k == 0) throw ContractError("form_groups: k must be >= 1");
  std::vector<std::uint32_t> order(clients.begin(), clients.end());
  rng.shuffle(std::span<std::uint32_t>(order));
  std::vector<mixer::MixGroup> groups;
  for (std::size_t begin = 0; begin < order.size(); begin += k) {
    const std::size_t end = std::min(order.size(), begin + k);
    mixer::MixGroup g;
    g.members.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
    groups.push_back(std::move(g));
  }
  return groups;
}

void assign_sequences(mixer::MixGroup& group, double alpha, std::size_t m, Rng& alloc_rng, Rng& mask_rng) {
  if (group.k() == 1) {
    group.allocation.counts = {static_cast<std::uint32_t>(m)};
    group.mask_set.masks = {mixer::PatchMask::full(m)};
    return;
  }
  group.allocation = mixer::sample_mixing_counts(group.k(), alpha, m, alloc_rng);
  group.mask_set = mixer::generate_mask_set(group.allocation, m, mask_rng);
}

}  // namespace cutmixsl::protocol
