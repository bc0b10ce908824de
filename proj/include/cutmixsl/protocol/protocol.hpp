// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "cutmixsl/mixer/mixer.hpp"
#include "cutmixsl/model/vit.hpp"
#include "cutmixsl/protocol/messages.hpp"

namespace cutmixsl::protocol {

/// Shuffles the clients and cuts them into groups of k in order. A leftover
/// of r >= 2 clients forms one r-way group, a single leftover a singleton.
/// Allocation and masks are left empty.
std::vector<mixer::MixGroup> form_groups(std::span<const std::uint32_t> clients, std::size_t k, Rng& rng);

/// Draws the group's allocation and mask set. Singletons get the full mask
/// without consuming randomness.
void assign_sequences(mixer::MixGroup& group, double alpha, std::size_t m, Rng& alloc_rng, Rng& mask_rng);

enum class GradientMode { kUnicast, kBroadcast };

/// One GradientDown per member, in member order. Unicast zeroes the rows
/// outside each member's mask; broadcast copies the full gradient.
std::vector<GradientDown> route_gradients(const mixer::MixGroup& group, const mixer::TokenGrid& grad,
                                          GradientMode mode);

/// Elementwise mean of every parameter, accumulated in double. `weights`
/// (e.g. sample counts) must match the segment count when given.
model::ClientSegment fedavg_client_segments(const std::vector<model::ClientSegment>& segments,
                                            const std::optional<std::vector<double>>& weights = std::nullopt);

/// Copies the values of `from` into `to` (shapes must agree).
void assign_segment(const model::ClientSegment& from, model::ClientSegment& to);

}  // namespace cutmixsl::protocol
