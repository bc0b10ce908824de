// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/errors.hpp"
#include "cutmixsl/protocol/protocol.hpp"

namespace cutmixsl::protocol {

std::vector<GradientDown> route_gradients(const mixer::MixGroup& group, const mixer::TokenGrid& grad,
                                          GradientMode mode) {
  if (mode != GradientMode::kUnicast && mode != GradientMode::kBroadcast) {
    throw ContractError("route_gradients: unknown gradient mode");
  }
  if (group.mask_set.masks.size() != group.k()) throw ContractError("route_gradients: group has no mask set");
  std::vector<GradientDown> out;
  for (std::size_t i = 0; i < group.k(); ++i) {
    GradientDown msg{GradientTarget::kClient, group.members[i], grad};
    if (mode == GradientMode::kUnicast) msg.grad = mixer::cut(grad, group.mask_set.masks[i]).tokens;
    out.push_back(std::move(msg));
  }
  return out;
}

}  // namespace cutmixsl::protocol
