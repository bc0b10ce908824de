// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cutmixsl/model/vit.hpp"

namespace cutmixsl::model {

// Layout, all integers little-endian:
//   magic    8 bytes  "CMSLCKPT"
//   version  u32      1
//   count    u32
//   count records:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rank     u32, rank x u64 dims
//     numel x f32 values, row-major

struct StoredTensor {
  std::string name;
  tensor::Shape shape;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<StoredTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<StoredTensor> load_checkpoint(const std::string& path);

/// Copies stored values into same-named parameters. Throws IngestionError on a
/// missing name and DimensionError on a shape mismatch.
void assign(const std::vector<StoredTensor>& stored, const std::vector<NamedTensor>& params);

}  // namespace cutmixsl::model
