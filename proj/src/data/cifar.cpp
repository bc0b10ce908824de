// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/errors.hpp"

namespace cutmixsl::data {

Dataset decode_cifar_batch(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  Dataset ds;
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw IngestionError(name + ": truncated record at byte offset " + std::to_string(records * kCifarRecordBytes) +
                         " (" + std::to_string(bytes.size() % kCifarRecordBytes) + " of " +
                         std::to_string(kCifarRecordBytes) + " bytes)");
  }
  ds.labels.resize(records);
  ds.images.resize(records * ds.image_size());
  for (std::size_t r = 0; r < records; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= ds.num_classes) {
      throw IngestionError(name + ": label " + std::to_string(rec[0]) + " out of range at byte offset " +
                           std::to_string(r * kCifarRecordBytes));
    }
    ds.labels[r] = rec[0];
    float* dst = ds.images.data() + r * ds.image_size();
    for (std::size_t e = 0; e < ds.image_size(); ++e) dst[e] = static_cast<float>(rec[1 + e]) / 255.0f;
  }
  return ds;
}

Dataset read_cifar_batch(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError(path + ": cannot open (offset 0)");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_cifar_batch(bytes, path);
}

std::vector<std::uint8_t> encode_cifar_batch(const Dataset& ds) {
  if (ds.channels != 3 || ds.height != 32 || ds.width != 32) {
    throw DimensionError("encode_cifar_batch: images must be 3x32x32");
  }
  std::vector<std::uint8_t> out(ds.size() * kCifarRecordBytes);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::uint8_t* rec = out.data() + r * kCifarRecordBytes;
    rec[0] = static_cast<std::uint8_t>(ds.labels[r]);
    const auto img = ds.image(r);
    for (std::size_t e = 0; e < img.size(); ++e) {
      const float v = std::clamp(img[e], 0.0f, 1.0f);
      rec[1 + e] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

void write_cifar_batch(const std::string& path, const Dataset& ds) {
  const auto bytes = encode_cifar_batch(ds);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IngestionError(path + ": cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CifarSplit load_cifar10(const std::string& dir, bool standardize_channels) {
  const std::filesystem::path root(dir);
  CifarSplit split;
  for (int i = 1; i <= 5; ++i) {
    const auto part = read_cifar_batch((root / ("data_batch_" + std::to_string(i) + ".bin")).string());
    split.train.images.insert(split.train.images.end(), part.images.begin(), part.images.end());
    split.train.labels.insert(split.train.labels.end(), part.labels.begin(), part.labels.end());
  }
  split.test = read_cifar_batch((root / "test_batch.bin").string());
  if (standardize_channels) {
    const auto stats = channel_stats(split.train);
    standardize(split.train, stats);
    standardize(split.test, stats);
  }
  return split;
}

}  // namespace cutmixsl::data
