// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "cutmixsl/mixer/types.hpp"

namespace cutmixsl::protocol {

// Wire format, little-endian. Every message starts with a one-byte tag.
//
// SequenceAssignment  (mixer -> client)
//   u8 tag=1, u8 0, u16 M, u32 client_id, then the mask: one u64 with bit j =
//   token j when M <= 64, else ceil(M/8) bytes, LSB first.
// UploadCutSmashed    (client -> mixer), 16-byte header:
//   u8 tag=2, u8 flags (bit0 labels present), u16 num_classes, u32 client_id,
//   u32 batch, u16 M, u16 d_m; then for each sample the transmitted rows in
//   position order (d_m f32 each); then batch x num_classes f32 labels.
//   The mask is not sent: the mixer assigned it, or it is the full mask
//   when no sequence was assigned.
// ServerBatch         (mixer -> server)
//   u8 tag=3, u8 flags (bit0 shuffled), u16 num_classes, u32 group_id,
//   u32 batch, u16 M, u16 d_m, u16 k, k x (u32 client_id, u16 a_i),
//   batch x M x d_m f32 tokens, batch x num_classes f32 soft labels.
// GradientDown        (server -> mixer for a group, mixer -> client)
//   u8 tag=4, u8 target (0 client, 1 group), u16 0, u32 id, u32 batch,
//   u16 M, u16 d_m, batch x M x d_m f32.

enum class Tag : std::uint8_t {
  kSequenceAssignment = 1,
  kUploadCutSmashed = 2,
  kServerBatch = 3,
  kGradientDown = 4,
};

struct SequenceAssignment {
  std::uint32_t client_id = 0;
  mixer::PatchMask mask;
};

struct UploadCutSmashed {
  std::uint32_t client_id = 0;
  mixer::CutSmashed cut;
  std::size_t num_classes = 0;
  std::vector<float> label;  // batch x num_classes
};

struct ServerBatch {
  std::uint32_t group_id = 0;
  bool shuffled = false;
  mixer::CutMixBatch cutmix;
};

enum class GradientTarget : std::uint8_t { kClient = 0, kGroup = 1 };

struct GradientDown {
  GradientTarget target = GradientTarget::kClient;
  std::uint32_t id = 0;
  mixer::TokenGrid grad;
};

using Message = std::variant<SequenceAssignment, UploadCutSmashed, ServerBatch, GradientDown>;

/// Throws ProtocolError when an upload has nonzero rows outside its mask.
void check_invariants(const Message& msg);

std::vector<std::uint8_t> encode(const Message& msg);

/// Uploads need the mask the mixer assigned; `masks` maps client id to it.
/// Clients absent from `masks` are taken to have sent the full grid.
Message decode(std::span<const std::uint8_t> bytes, const std::map<std::uint32_t, mixer::PatchMask>& masks = {});

/// Bytes on the link: the encoded size, except that a sequence assignment
/// counts only its mask (one u64 for M <= 64, else ceil(M/8) bytes).
std::size_t payload_meter(const Message& msg);

/// Activation part of an upload: a_i x d_m x 4 x batch. Zero for other messages.
std::size_t activation_bytes(const Message& msg);

inline constexpr std::size_t kUploadHeaderBytes = 16;

}  // namespace cutmixsl::protocol
